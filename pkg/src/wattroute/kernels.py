"""Hot numeric kernels, each in a numba and a pure-numpy variant.

Covers the SplitMix64 draw synthesis used by the workload simulator, batch
operating-curve evaluation, and the powerlaw residual/Jacobian step of the
fitter. Dispatch between variants is decided once per process by
`wattroute._backend` (WATTROUTE_BACKEND env flag).

PRNG contract (bit-reproducible, documented for external replay oracles):

    GOLDEN = 0x9E3779B97F4A7C15
    mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27; z *= 0x94D049BB133111EB
            z ^= z >> 31                     (all mod 2**64)
    out(seed, j) = mix(seed + (j + 1) * GOLDEN)   # j-th output, O(1) access
    substream_seed(seed, i) = out(seed, i)        # per-query substream i
    unit(z) = (z >> 11) * 2.0**-53                # double in [0, 1)

Query i consumes exactly three unit draws from its substream, in order:
j=0 category, j=1 input length, j=2 correctness.
"""

import numpy as np

from ._backend import ACTIVE_BACKEND, have_numba

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
U64 = 0xFFFFFFFFFFFFFFFF
_INV53 = 2.0**-53

# family codes shared with curvefit
AFFINE, QUADRATIC, POWERLAW = 0, 1, 2


# ---------------------------------------------------------------------------
# numpy variants
# ---------------------------------------------------------------------------

def _mix_np(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def query_draws_numpy(seed: int, n_queries: int) -> np.ndarray:
    """(n_queries, 3) unit draws: columns are category, length, correctness."""
    out = np.empty((n_queries, 3), dtype=np.float64)
    if n_queries == 0:
        return out
    idx = np.arange(1, n_queries + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        sub = _mix_np(np.uint64(seed) + idx * np.uint64(GOLDEN))
        for j in range(3):
            z = _mix_np(sub + np.uint64((j + 1) * GOLDEN & U64))
            out[:, j] = (z >> np.uint64(11)).astype(np.float64) * _INV53
    return out


def eval_curve_numpy(family: int, params: np.ndarray, tokens: np.ndarray) -> np.ndarray:
    """Vector curve evaluation; `tokens` is float64, result float64."""
    if family == AFFINE:
        return params[0] + params[1] * tokens
    if family == QUADRATIC:
        return params[0] + tokens * (params[1] + params[2] * tokens)
    if family == POWERLAW:
        # 0**b is 0 for b > 0, so the intercept convention holds at n = 0
        return params[0] * np.power(tokens, params[1]) + params[2]
    raise ValueError(f"unknown family code {family}")


def powerlaw_resid_jac_numpy(a, b, c, tokens, energy):
    """Residuals r_i = a*n^b + c - E_i and the analytic 3-column Jacobian."""
    nb = np.power(tokens, b)
    r = a * nb + c - energy
    jac = np.empty((tokens.size, 3), dtype=np.float64)
    jac[:, 0] = nb
    jac[:, 1] = a * nb * np.log(tokens)
    jac[:, 2] = 1.0
    return r, jac


# ---------------------------------------------------------------------------
# numba variants (same arithmetic, explicit loops)
# ---------------------------------------------------------------------------

if have_numba():
    from numba import njit

    @njit(cache=True)
    def _mix_nb(z):
        z = z ^ (z >> np.uint64(30))
        z = z * np.uint64(MIX1)
        z = z ^ (z >> np.uint64(27))
        z = z * np.uint64(MIX2)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def query_draws_numba(seed, n_queries):
        out = np.empty((n_queries, 3), dtype=np.float64)
        golden = np.uint64(GOLDEN)
        s = np.uint64(seed)
        for i in range(n_queries):
            sub = _mix_nb(s + np.uint64(i + 1) * golden)
            for j in range(3):
                z = _mix_nb(sub + np.uint64(j + 1) * golden)
                out[i, j] = np.float64(z >> np.uint64(11)) * _INV53
        return out

    @njit(cache=True)
    def eval_curve_numba(family, params, tokens):
        n = tokens.size
        out = np.empty(n, dtype=np.float64)
        if family == 0:
            for i in range(n):
                out[i] = params[0] + params[1] * tokens[i]
        elif family == 1:
            for i in range(n):
                out[i] = params[0] + tokens[i] * (params[1] + params[2] * tokens[i])
        else:
            for i in range(n):
                out[i] = params[0] * tokens[i] ** params[1] + params[2]
        return out

    @njit(cache=True)
    def powerlaw_resid_jac_numba(a, b, c, tokens, energy):
        n = tokens.size
        r = np.empty(n, dtype=np.float64)
        jac = np.empty((n, 3), dtype=np.float64)
        for i in range(n):
            nb = tokens[i] ** b
            r[i] = a * nb + c - energy[i]
            jac[i, 0] = nb
            jac[i, 1] = a * nb * np.log(tokens[i])
            jac[i, 2] = 1.0
        return r, jac

else:  # pragma: no cover - exercised only in numba-free installs
    query_draws_numba = None
    eval_curve_numba = None
    powerlaw_resid_jac_numba = None


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if ACTIVE_BACKEND == "numba":
    _query_draws = query_draws_numba
    _eval_curve = eval_curve_numba
    _powerlaw_resid_jac = powerlaw_resid_jac_numba
else:
    _query_draws = query_draws_numpy
    _eval_curve = eval_curve_numpy
    _powerlaw_resid_jac = powerlaw_resid_jac_numpy


def query_draws(seed: int, n_queries: int) -> np.ndarray:
    return _query_draws(np.uint64(int(seed) & U64), n_queries)


def eval_curve_array(family: int, params, tokens) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    tokens = np.asarray(tokens, dtype=np.float64)
    if family not in (AFFINE, QUADRATIC, POWERLAW):
        raise ValueError(f"unknown family code {family}")
    return _eval_curve(family, params, tokens)


def powerlaw_resid_jac(a: float, b: float, c: float, tokens, energy):
    tokens = np.asarray(tokens, dtype=np.float64)
    energy = np.asarray(energy, dtype=np.float64)
    return _powerlaw_resid_jac(a, b, c, tokens, energy)


def splitmix64_out(seed: int, j: int) -> int:
    """Scalar reference implementation of out(seed, j); pure Python ints."""
    z = (seed + (j + 1) * GOLDEN) & U64
    z = ((z ^ (z >> 30)) * MIX1) & U64
    z = ((z ^ (z >> 27)) * MIX2) & U64
    return z ^ (z >> 31)


def unit_double(z: int) -> float:
    """Map a 64-bit word to a double in [0, 1) using the top 53 bits."""
    return (z >> 11) * _INV53
