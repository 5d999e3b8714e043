"""Competition-based adaptive activations with a manual-backprop harness."""

from .activations import (
    BaselineActivation,
    CasCache,
    CasParams,
    baseline_backward,
    baseline_forward,
    baseline_init,
    carelu_backward,
    carelu_forward,
    cas_backward,
    cas_forward,
    cas_init,
    vanilla_sign_cas,
)
from .batchnorm import (
    BatchTooSmall,
    BnState,
    InvalidMode,
    bn_backward,
    bn_carelu_backward,
    bn_carelu_forward,
    bn_forward,
    bn_init,
)
from .data import Dataset, gen_blobs, gen_spirals, load_csv, normalize
from .gradcheck import GradCheckReport, central_diff, check, run_battery
from .indicators import (
    CompetitionKind,
    IndicatorResult,
    indicator_backward,
    indicator_forward,
)
from .network import (
    Adam,
    DivergedError,
    NetworkSpec,
    SGD,
    TrainConfig,
    TrainReport,
    build_network,
    cross_entropy,
    evaluate,
    load_checkpoint,
    mlp_spec,
    mse_loss,
    restore_network,
    save_checkpoint,
    train,
)
from .tensor import (
    NumericError,
    ShapeError,
    elementwise,
    matmul,
    relu,
    reshape,
    row_reduce,
    tensor,
)

__version__ = "0.1.0"
