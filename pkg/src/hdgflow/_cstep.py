"""Complex-step differentiation helpers.

Every pointwise kernel in the package is written so that it accepts complex
arrays and stays analytic in the real direction of its inputs.  Branching
operations therefore go through :func:`cabs`, :func:`cmax` and :func:`cmin`,
which compare real parts and carry the imaginary perturbation along the
selected branch.
"""

import numpy as np

STEP = 1e-30


def cabs(x):
    """Absolute value that differentiates as ``sign(x)`` under complex step."""
    return np.where(np.real(x) < 0, -x, x)


def cmax(a, b):
    return np.where(np.real(a) >= np.real(b), a, b)


def cmin(a, b):
    return np.where(np.real(a) <= np.real(b), a, b)


def jacobians(fun, *args, h=STEP):
    """Evaluate ``fun(*args)`` and its derivatives with respect to each argument.

    Each argument is an array whose last axis holds the independent
    components; leading axes are batch axes that broadcast against each other.
    All perturbations are stacked on a new leading axis so ``fun`` is called
    once.

    Returns
    -------
    value : ndarray
        ``fun(*args)`` evaluated at the real point.
    jacs : list of ndarray
        ``jacs[i][..., j]`` is the derivative of the output with respect to
        component ``j`` of ``args[i]``; shape ``value.shape + (n_i,)``.
    """
    args = [np.asarray(a, dtype=float) for a in args]
    sizes = [a.shape[-1] for a in args]
    total = sum(sizes)
    stacked = []
    offset = 0
    for a, n in zip(args, sizes):
        e = np.zeros((total,) + (1,) * (a.ndim - 1) + (n,))
        idx = np.arange(n)
        e[offset + idx, ..., idx] = 1.0
        stacked.append(a[None] + 1j * h * e)
        offset += n
    out = fun(*stacked)
    value = np.real(out[0])
    deriv = np.moveaxis(np.imag(out) / h, 0, -1)
    jacs = []
    offset = 0
    for n in sizes:
        jacs.append(deriv[..., offset:offset + n])
        offset += n
    return value, jacs
