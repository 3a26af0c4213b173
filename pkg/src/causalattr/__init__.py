"""Average-causal-effect attributions for small neural networks.

Networks are treated as causal mechanisms from input neurons to outputs:
interventional expectations E[y | do(x_i = alpha)] are computed by a
second-order expansion at the intervened input moments (or a Hessian-free
directional variant), swept over each feature's domain, summarized by Bayesian
polynomial regressors, and reduced to ACE attributions, saliency maps, and a
lookback-window estimate for recurrent networks.  A brute-force enumeration
oracle validates everything.
"""
from .errors import (
    CancellationWarning,
    CausalAttrError,
    DomainError,
    EmptyDataError,
    ExtrapolationWarning,
    HessianSizeError,
    HighVarianceWarning,
    IllConditionedFitError,
    NonSmoothWarning,
    NotPSDError,
    NotSymmetricError,
    NumericsError,
    SerializationError,
    ShapeError,
    TrainingDivergedError,
)
from .nets import (
    HESSIAN_CAP,
    DenseLayer,
    EvalPoint,
    GruNetwork,
    Network,
    directional_second_derivative,
    forward,
    gradient,
    hessian,
    load_network,
    network_from_json,
    network_to_json,
    output_input_jacobian,
    save_network,
    unroll,
)
from .moments import (
    Dataset,
    EigenPairs,
    Moments,
    SequenceDataset,
    eigendecompose,
    empirical_moments,
    intervene,
    load_dataset,
    load_sequence_dataset,
    moments_from_rows,
    save_dataset,
    save_sequence_dataset,
)
from .effects import (
    AceResult,
    InterventionGrid,
    InterventionSweep,
    ace_at,
    ice,
    ie_approx,
    ie_exact,
    saliency,
    sweep_feedforward,
    sweep_recurrent,
    tau,
    write_pgm,
    write_saliency_csv,
    write_sweep_csv,
)
from .regressor import (
    BayesPosterior,
    CausalRegressor,
    PolyBasis,
    baseline,
    bayes_fit,
    fit_regressor,
    load_regressor,
    log_evidence,
    predict,
    save_regressor,
    select_order,
)
from .oracle import enumerate_ie, enumerate_ie_recurrent
from .train import iris_dataset, synth_sequences, train_gru, train_mlp

__version__ = "0.1.0"
