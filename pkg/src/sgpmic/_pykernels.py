"""Pure numpy implementations of the hot covariance loops.

Same call signatures and results as the compiled ``_ckernels`` module.
"""
import numpy as np

NAME = "python"


def sqdist(A, B):
    """Squared Euclidean distances between the rows of ``A`` and ``B``."""
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijq,ijq->ij", diff, diff)


def rbf_parts(A, B, gamma):
    """Return ``(E, D2)`` with ``E = exp(-gamma/2 * D2)``."""
    D2 = sqdist(A, B)
    return np.exp(-0.5 * gamma * D2), D2


def rbf_input_grad(A, B, W, gamma, E=None, scale=1.0):
    """Contract RBF input derivatives with weights ``W`` (already multiplied
    by ``theta_rbf * E``), or with ``W * scale * E`` when ``E`` is given."""
    if E is not None:
        W = W * (scale * E)
    Wg = gamma * W
    row = Wg.sum(axis=1)
    col = Wg.sum(axis=0)
    gA = -(row[:, None] * A - Wg @ B)
    gB = Wg.T @ A - col[:, None] * B
    return gA, gB
