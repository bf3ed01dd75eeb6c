"""Model checkpoints: a numpy ``.npz`` archive with a JSON metadata entry.

See ``docs/checkpoint-format.md`` for the layout.
"""
import json
import os
import tempfile

import numpy as np

from .errors import InputError
from .kernels import ALL_PARAM_NAMES, KernelParams, KernelSpec
from .mixture import ModelState

FORMAT_NAME = "sgpmic-checkpoint"
FORMAT_VERSION = 1


def _trace_array(trace):
    rows = [(it, kl, np.nan if acc is None else acc) for it, kl, acc in (trace or [])]
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def save_checkpoint(path, state, seed=None, trace=None, responsibilities=None,
                    n_features=None):
    """Write ``state`` (and optionally q(S) and the EM trace) to ``path``.

    ``n_features`` (P, the data dimension) is recorded in the metadata when
    given.  The file is written to a temporary name and renamed into place.
    """
    N, Q = state.X.shape
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kernel": state.spec.value,
        "seed": seed,
        "N": N,
        "P": None if n_features is None else int(n_features),
        "Q": Q,
        "M": state.n_components,
        "N_prime": state.n_inducing,
        "kernel_param_names": list(ALL_PARAM_NAMES),
    }
    arrays = {
        "X": state.X,
        "X_u": state.X_u,
        "kernel_params": np.array([k.as_array() for k in state.kernels]),
        "beta": np.array([state.beta]),
        "log_pi": state.log_pi,
        "means": state.means,
        "log_cov_diag": state.log_cov_diag,
        "trace": _trace_array(trace),
    }
    if responsibilities is not None:
        arrays["responsibilities"] = np.asarray(responsibilities, dtype=np.float64)
    arrays = {k: np.ascontiguousarray(v, dtype="<f8") for k, v in arrays.items()}
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".npz.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Checkpoint(dict):
    """Loaded checkpoint: ``state``, ``seed``, ``trace``, ``responsibilities``, ``meta``."""

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name) from None


def load_checkpoint(path):
    try:
        with np.load(path, allow_pickle=False) as z:
            data = {k: z[k] for k in z.files}
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read checkpoint {path}: {exc}") from exc
    if "meta" not in data:
        raise InputError(f"{path} has no metadata entry")
    meta = json.loads(str(data["meta"]))
    if meta.get("format") != FORMAT_NAME:
        raise InputError(f"{path} is not a {FORMAT_NAME} file")
    if meta.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported checkpoint version {meta.get('version')}")
    names = meta["kernel_param_names"]
    kernels = [KernelParams(**{n: float(v) for n, v in zip(names, row)})
               for row in data["kernel_params"]]
    state = ModelState(X=data["X"], X_u=data["X_u"], kernels=kernels,
                       beta=float(data["beta"][0]), log_pi=data["log_pi"], means=data["means"],
                       log_cov_diag=data["log_cov_diag"], spec=KernelSpec(meta["kernel"]))
    trace = [(int(it), float(kl), None if np.isnan(acc) else float(acc))
             for it, kl, acc in data["trace"]]
    return Checkpoint(state=state, seed=meta.get("seed"), trace=trace,
                      responsibilities=data.get("responsibilities"), meta=meta)
