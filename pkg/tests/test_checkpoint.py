import json

import numpy as np
import pytest

from sgpmic import mixture as mx
from sgpmic.checkpoint import load_checkpoint, save_checkpoint
from sgpmic.errors import InputError
from sgpmic.gradcheck import random_instance
from sgpmic.kernels import KernelSpec


@pytest.mark.parametrize("kernel", [KernelSpec.RBF, KernelSpec.LINEAR])
def test_roundtrip_bit_exact(tmp_path, kernel):
    state, r, Y = random_instance(N=12, M=3, seed=4, kernel=kernel)
    trace = [(1, -10.5, 80.0), (2, -9.25, None)]
    path = tmp_path / "m.npz"
    save_checkpoint(path, state, seed=17, trace=trace, responsibilities=r)
    ck = load_checkpoint(path)
    assert np.array_equal(ck.state.pack(), state.pack())
    assert ck.state.spec == state.spec
    assert ck.seed == 17 and ck.trace == trace
    assert np.array_equal(ck.responsibilities, r)
    # the loaded state gives the identical bound
    assert mx.kl_bound(ck.state, r, Y).kl_corrected == mx.kl_bound(state, r, Y).kl_corrected


def test_layout_is_plain_arrays(tmp_path):
    state, _, _ = random_instance(N=6, M=2, seed=0)
    path = tmp_path / "m.npz"
    save_checkpoint(path, state, seed=1)
    with np.load(path, allow_pickle=False) as z:
        assert {"X", "X_u", "kernel_params", "beta", "log_pi", "means", "log_cov_diag",
                "trace", "meta"} <= set(z.files)
        assert z["kernel_params"].shape == (2, 5)
        assert z["X"].dtype == np.dtype("<f8")
        meta = json.loads(str(z["meta"]))
    assert meta["N"] == 6 and meta["M"] == 2 and meta["kernel"] == "rbf"


def test_bad_files(tmp_path):
    with pytest.raises(InputError):
        load_checkpoint(tmp_path / "none.npz")
    p = tmp_path / "other.npz"
    np.savez(p, a=np.zeros(2))
    with pytest.raises(InputError):
        load_checkpoint(p)
    q = tmp_path / "wrong.npz"
    np.savez(q, meta=np.array(json.dumps({"format": "something-else", "version": 1})))
    with pytest.raises(InputError):
        load_checkpoint(q)
