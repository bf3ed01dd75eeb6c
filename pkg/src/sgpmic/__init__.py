"""Sparse Gaussian process mixture clustering."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import Dataset, load_csv, save_csv, synth_circle_arcs, synth_spiral3d
from .errors import (InputError, NonFiniteError, NumericalError, SgpmicError,
                     SingularKernelError)
from .initialization import (fcm_cluster, isomap_embed, pca_variance_dims,
                             select_inducing)
from .kernels import KernelParams, KernelSpec, add_jitter, gram, kernel_eval
from .metrics import clustering_accuracy, nmi
from .mixture import (BoundReport, FitResult, ModelState, assign_clusters, em_fit,
                      estep_qf, estep_qs, init_model, kl_bound, kl_bound_grads,
                      standard_bound)
from .scg import ScgConfig, ScgResult, scg_minimize
from .sparse_gp import (ComponentPosterior, DtcFactor, build_dtc, posterior_qf,
                        weighted_log_marginal)

__all__ = [
    "BACKEND", "BoundReport", "ComponentPosterior", "Dataset", "DtcFactor", "FitResult",
    "InputError", "KernelParams", "KernelSpec", "ModelState", "NonFiniteError",
    "NumericalError", "ScgConfig", "ScgResult", "SgpmicError", "SingularKernelError",
    "add_jitter", "assign_clusters", "build_dtc", "clustering_accuracy", "em_fit",
    "estep_qf", "estep_qs", "fcm_cluster", "gram", "init_model", "isomap_embed",
    "kernel_eval", "kl_bound", "kl_bound_grads", "load_checkpoint", "load_csv", "nmi",
    "pca_variance_dims", "posterior_qf", "save_checkpoint", "save_csv", "scg_minimize",
    "select_inducing", "standard_bound", "synth_circle_arcs", "synth_spiral3d",
    "weighted_log_marginal",
]
