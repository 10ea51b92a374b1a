"""dielnoise: electric-field noise and trapped-ion heating from lossy dielectrics.

Pipeline: an electrostatic perturbation solve yields the oscillation field E1
inside each dielectric body; the fluctuation-dissipation theorem converts the
dielectric loss of that field into a one-sided electric-field noise spectral
density at the charge, and into motional heating rates. An analytic layered-
plane model provides the independent validation oracle.
"""

__version__ = "0.1.0"

from .constants import AMU, C_LIGHT, EPS0, HBAR, K_B, Q_E
from .fits import (FitError, LossTangentFit, MeasurementRecord, PowerLawFit,
                   fit_loss_tangent, fit_power_law, reduced_chi_square)
from .geometry import (Box, Charge, Cylinder, DielectricRegion, GridSpec,
                       HomogenizedStack, Scene, SceneValidationError,
                       homogenize_layers, layer_stack_regions)
from .layers import (GreenFunctionValue, LayerStack, QuadratureError,
                     blackbody_psd, fresnel, green_functions, plane_noise_psd,
                     stack_reflection)
from .materials import Material, UnknownMaterialError, material_lookup
from .noise import (ModeSet, NoiseResult, beta_rate, beta_weight,
                    damping_coefficient, heating_rate, lamb_dicke, power_loss,
                    project_axial, spectral_density, spectral_density_from_field)
from .config import build_scene, load_scene, scene_to_doc
from .solver import (ConvergenceError, FieldSolution, PerturbationField,
                     SceneSystem, assemble, image_charge_field, loss_integral,
                     perturbation_field, solve_potential)
from .thermometry import (RabiDataset, TruncationError, fit_beta, fit_beta_dot,
                          rabi_signal, recover_rate, synth_experiment)
