"""Feed-forward neural networks with trainable activation subnetworks.

Each activation can be an ordinary fixed nonlinearity or a small trainable
1-k-1 subnetwork whose weights are learned jointly with the rest of the
model (optionally shared across a layer). The package also ships the
optimizers, the early-stopping training loop, and the K-fold
cross-validation harness used to compare the two kinds of models.
"""

from vafnet.activations import ActivationKind, act, act_deriv
from vafnet.linalg import Matrix, ShapeError
from vafnet.vaf import (
    ApproximationError,
    VafParams,
    VafGrad,
    vaf_forward,
    vaf_backward,
    vaf_forward_array,
    vaf_backward_array,
    init_vaf_random,
    init_vaf_specific,
    parameter_count,
)
from vafnet.network import (
    Dense,
    Fixed,
    Vaf,
    Network,
    build,
    forward,
    backward,
    loss_sse,
    loss_sse_grad,
    flatten_params,
    apply_update,
    save_network,
    load_network,
)
from vafnet.optim import (
    Sgd,
    Adam,
    RmsProp,
    Rprop,
    OptimizerSpec,
    DivergenceError,
    make_optimizer,
)
from vafnet.training import TrainConfig, TrainTrace, train, epoch
from vafnet.evaluation import (
    HyperGrid,
    CvReport,
    StratificationError,
    kfold,
    compare,
    metric_rmse,
    metric_accuracy,
)
from vafnet.data import (
    Dataset,
    Task,
    ParseError,
    load_csv,
    normalize,
    denormalize,
    split,
    synth_regression,
    synth_classification,
)
from vafnet.network import ModelFamily, parse_arch

__version__ = "0.1.0"
