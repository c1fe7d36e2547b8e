from .mode_space import FieldFunction, ModeGrid
from .kernel_algebra import Kernel
from .log_scalar import LogScalar
from .gaussian_engine import BlockGaussian, CoefficientFunctional, DiracDelta, GaussianFunctional, GeneratingFunctional
from .states import CharacteristicFunctional, WignerState
from .moyal import StarResult
from .fock_oracle import TruncatedState
from .scenario_builder import ScenarioBuilder
