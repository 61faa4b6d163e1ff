"""Counter-based Gaussian streams for the stochastic integrator.

Every standard-normal triple is a pure function of
``(seed, trajectory index, step index)``. No generator state is carried
between steps or trajectories, so an ensemble can be split over any number
of workers and still reproduce bit for bit.

Block cipher: Philox4x32-10 (Salmon et al., SC'11). The 128-bit counter is
``(step, sub_block, index_lo, index_hi)`` and the 64-bit key is the seed.

Gaussian transform: 128-layer ziggurat in the floating-point form of
Doornik (2005), with the layer index taken from bits that are independent
of the abscissa. For step ``k`` the block with ``sub_block = 0`` supplies
the abscissae of zeta_A, zeta_B, zeta_C (words 0, 1, 2) and their layer
indices (bytes 0, 1, 2 of word 3, low 7 bits each). Draws rejected by the
rectangle test (about 1.2 % of them) continue on fresh blocks
``sub_block = 1, 2, ...``, always in the order A, B, C. The rejection
sampler is exact, so each variate has a standard-normal marginal.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_LAYER_MASK = np.uint64(0x7F)
_U32_SCALE = 2.0**-32

ZIG_LAYERS = 128
ZIG_R = 3.442619855899
ZIG_V = 9.91256303526217e-3


def _ziggurat_tables(n: int = ZIG_LAYERS, r: float = ZIG_R, v: float = ZIG_V):
    x = np.empty(n + 1)
    f = math.exp(-0.5 * r * r)
    x[0] = v / f
    x[1] = r
    x[n] = 0.0
    for i in range(2, n):
        x[i] = math.sqrt(-2.0 * math.log(v / x[i - 1] + f))
        f = math.exp(-0.5 * x[i] * x[i])
    ratio = x[1:] / x[:-1]
    return x, ratio


ZIG_X, ZIG_RATIO = _ziggurat_tables()


@nb.njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on a 4x32-bit counter; words are held in uint64."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True)
def _open_unit(word):
    # (0, 1), never hits either end
    return (np.float64(word) + 0.5) * _U32_SCALE


@nb.njit(cache=True, nogil=True)
def _zig_finish(u, layer, step, sub, t_lo, t_hi, k_lo, k_hi):
    """Rejection branch of the ziggurat; returns (value, next sub_block)."""
    while True:
        b0, b1, b2, b3 = philox4x32(step, np.uint64(sub), t_lo, t_hi, k_lo, k_hi)
        sub += 1
        if layer == 0:
            # base strip: exact tail beyond R (Marsaglia 1964)
            x = math.log(_open_unit(b0)) / ZIG_R
            y = math.log(_open_unit(b1))
            if -2.0 * y >= x * x:
                if u < 0.0:
                    return x - ZIG_R, sub
                return ZIG_R - x, sub
        else:
            x = u * ZIG_X[layer]
            f0 = math.exp(-0.5 * (ZIG_X[layer] * ZIG_X[layer] - x * x))
            f1 = math.exp(-0.5 * (ZIG_X[layer + 1] * ZIG_X[layer + 1] - x * x))
            if f1 + _open_unit(b0) * (f0 - f1) < 1.0:
                return x, sub
        u = 2.0 * _open_unit(b2) - 1.0
        layer = np.int64(b3 & _LAYER_MASK)
        if abs(u) < ZIG_RATIO[layer]:
            return u * ZIG_X[layer], sub


@nb.njit(cache=True, nogil=True)
def normal_triple(step, t_lo, t_hi, k_lo, k_hi):
    """Standard-normal (zeta_A, zeta_B, zeta_C) for one step of one stream.

    All arguments are uint64 holding 32-bit words.
    """
    w0, w1, w2, w3 = philox4x32(step, np.uint64(0), t_lo, t_hi, k_lo, k_hi)
    sub = 1

    u = 2.0 * _open_unit(w0) - 1.0
    layer = np.int64(w3 & _LAYER_MASK)
    if abs(u) < ZIG_RATIO[layer]:
        za = u * ZIG_X[layer]
    else:
        za, sub = _zig_finish(u, layer, step, sub, t_lo, t_hi, k_lo, k_hi)

    u = 2.0 * _open_unit(w1) - 1.0
    layer = np.int64((w3 >> np.uint64(8)) & _LAYER_MASK)
    if abs(u) < ZIG_RATIO[layer]:
        zb = u * ZIG_X[layer]
    else:
        zb, sub = _zig_finish(u, layer, step, sub, t_lo, t_hi, k_lo, k_hi)

    u = 2.0 * _open_unit(w2) - 1.0
    layer = np.int64((w3 >> np.uint64(16)) & _LAYER_MASK)
    if abs(u) < ZIG_RATIO[layer]:
        zc = u * ZIG_X[layer]
    else:
        zc, sub = _zig_finish(u, layer, step, sub, t_lo, t_hi, k_lo, k_hi)
    return za, zb, zc


def split_words(value: int) -> tuple[np.uint64, np.uint64]:
    """Low and high 32-bit words of a 64-bit integer (seed or index)."""
    value = int(value)
    if not 0 <= value < 2**64:
        raise ValueError(f"expected a 64-bit unsigned integer, got {value}")
    return np.uint64(value & 0xFFFFFFFF), np.uint64(value >> 32)


@nb.njit(cache=True, nogil=True)
def _fill_triples(out, first_step, t_lo, t_hi, k_lo, k_hi):
    for k in range(out.shape[0]):
        za, zb, zc = normal_triple(np.uint64(first_step + k), t_lo, t_hi, k_lo, k_hi)
        out[k, 0] = za
        out[k, 1] = zb
        out[k, 2] = zc


def normal_triples(seed: int, index: int, n_steps: int, first_step: int = 0) -> np.ndarray:
    """The ``(n_steps, 3)`` array of triples consumed by one trajectory."""
    k_lo, k_hi = split_words(seed)
    t_lo, t_hi = split_words(index)
    if first_step < 0 or first_step + n_steps > 2**32:
        raise ValueError("step counter must stay within 32 bits")
    out = np.empty((n_steps, 3))
    _fill_triples(out, first_step, t_lo, t_hi, k_lo, k_hi)
    return out


@nb.njit(cache=True, nogil=True)
def _fill_stream(out, k_lo, k_hi):
    # flat stream for distribution tests: step-major, stream index 0
    n = out.shape[0] // 3
    for k in range(n):
        za, zb, zc = normal_triple(np.uint64(k), np.uint64(0), np.uint64(0), k_lo, k_hi)
        out[3 * k] = za
        out[3 * k + 1] = zb
        out[3 * k + 2] = zc


def standard_normals(seed: int, n: int) -> np.ndarray:
    """``n`` standard-normal deviates from stream (seed, 0)."""
    k_lo, k_hi = split_words(seed)
    m = -(-n // 3)
    out = np.empty(3 * m)
    _fill_stream(out, k_lo, k_hi)
    return out[:n]
