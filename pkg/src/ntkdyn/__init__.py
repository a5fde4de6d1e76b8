"""Neural tangent kernel dynamics at finite width.

Analytic infinite-width NTKs (fully connected and residual), hand-rolled
finite networks with factorized empirical-NTK assembly, full-batch training
dynamics with trace recording, positive-definiteness certification, and the
kernel-divergence gap statistic, plus CSV-emitting experiment recipes.
"""

from .certify import (GapReport, SpdCertificate, certify_spd, divergence_gap,
                      eigenvalue_transfer_check)
from .datasets import MnistSubset, load_mnist, make_circle_dataset, write_synthetic_idx
from .errors import ContractViolationError, DivergedRunError, FormatError
from .kernels import (AnalyticKernelSpec, KernelMatrix, fcn_gram, fcntk,
                      kappa0, kappa1, kappa_maclaurin_coeffs, res_gram, resntk)
from .linalg import frobenius_distance, sym_eig_min
from .networks import (ArchDescriptor, FcnParams, ForwardCache, NetworkParams,
                       ResNetParams, empirical_ntk, fcn_forward, grad_check,
                       init_network, param_gradients, resnet_forward)
from .recipes import (kernel_slice, run_divergence, run_mnist_parity,
                      run_width_sweep)
from .rng import RngStream, gaussian_matrix
from .training import (SampleSet, TrainingConfig, TrainingTrace, kr_matrix,
                       loss_gradient_step, loss_value, lyapunov,
                       residual_dynamics_rhs, residuals, train)

__version__ = "0.1.0"
