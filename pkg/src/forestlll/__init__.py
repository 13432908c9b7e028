"""Variable-setting local lemma toolkit: events with seeds, convergence criteria,
resampling solvers, witness forests, and three graph-coloring applications."""

__version__ = "0.1.0"

from .core import (
    UNASSIGNED,
    Domain,
    ElementaryEvent,
    Event,
    Instance,
    MonochromaticEvent,
    PartialConfigurationError,
    PredicateEvent,
    RepetitionEvent,
    TableEvent,
    event_probability,
    natural_dependency_graph,
    occurs,
    power,
    read_instance,
    seed_for,
    write_instance,
)
from .criteria import (
    GeometricTail,
    PowerSpectrum,
    check_cell,
    check_entropy_condition,
    check_global_cell,
    min_ratio,
    phi,
    step_threshold,
)
from .solvers import entropy_compression, forest_algorithm, moser_tardos_resampling, trial_rng
from .witness import build_forest, check_properties, q_sequence, s_check

__all__ = [
    "__version__",
    "Domain",
    "ElementaryEvent",
    "Event",
    "GeometricTail",
    "Instance",
    "MonochromaticEvent",
    "PartialConfigurationError",
    "PowerSpectrum",
    "PredicateEvent",
    "RepetitionEvent",
    "TableEvent",
    "UNASSIGNED",
    "build_forest",
    "check_cell",
    "check_entropy_condition",
    "check_global_cell",
    "check_properties",
    "entropy_compression",
    "event_probability",
    "forest_algorithm",
    "min_ratio",
    "moser_tardos_resampling",
    "natural_dependency_graph",
    "occurs",
    "phi",
    "power",
    "q_sequence",
    "read_instance",
    "s_check",
    "seed_for",
    "step_threshold",
    "trial_rng",
    "write_instance",
]
