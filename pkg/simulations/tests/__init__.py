from .test_admin import SimulationRunAdminTest
from .test_cases import BuildCaseTest, GeometryTest, InflowBufferTest, MotionTest
from .test_commands import CliRunTest, ManagementCommandTest
from .test_correction import (
    CorrectionMatrixTest,
    PositionRegularizationTest,
    RkgcPairTest,
    SmoothnessIndicatorTest,
)
from .test_coupling import ImaginaryStateTest, PressureCouplingTest, TimeAverageTest
from .test_fluid import ContinuityTest, EquationOfStateTest, MomentumTest, RiemannInterfaceTest
from .test_forms import CaseConfigFormTest, LoadCaseConfigTest
from .test_integration import AdvectionStepTest, SolidSubstepTest, TimeStepTest
from .test_kernels import CrossPairsTest, KernelEvalTest, NeighborListTest
from .test_metrics import OscillationMetricsTest, ProbeFileTest
from .test_models import SimulationRunModelTest
from .test_outputs import FormatTest, RunCaseTest, ScheduleTest
from .test_particles import LatticeFillTest, ParticleSystemTest
from .test_probes import BoundProbeTest, PressureInterpolationTest, ProbeSeriesTest
from .test_solid import (
    BeamBendingTest,
    DeformationGradientTest,
    MaterialConstantsTest,
    SolidDynamicsTest,
    SolidReferenceTest,
    StressTest,
)
from .test_verification import VerificationSuiteTest
