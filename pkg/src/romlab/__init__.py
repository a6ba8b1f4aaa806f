"""POD/Galerkin reduced-order models with learned variational-multiscale closures."""

from .errors import (CapabilityError, ChecksumError, DimensionError, DivergenceError,
                     EvaluationError, HeaderError, ParseError, RankError, RomlabError,
                     SearchError, TruncatedError, ValidationError)
from .fields import (BurgersConfig, Discretization, FieldEnsemble, dot, generate_burgers,
                     load_ensemble, save_ensemble)
from .pod import PodBasis, compute_pod, load_basis, project, reconstruct, save_basis
from .rom import (RomOperators, StepperConfig, Trajectory, assemble_operators, integrate,
                  load_operators, rhs, save_operators)
from .closure import (ClosureDataset, compute_targets, load_dataset, save_dataset,
                      split_windows)

__version__ = "0.1.0"
