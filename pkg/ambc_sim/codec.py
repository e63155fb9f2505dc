"""Real orthogonal space-time block codes and the differential block recursion.

A code block is an M x M matrix whose column j is the vector sent by the M Tag
antennas in symbol period j. The order-2, 4 and 8 designs are the left
multiplication tables of the complex numbers, quaternions and octonions built
by Cayley-Dickson doubling; for any such algebra ``|u v| = |u| |v|``, which is
exactly ``X^T X = |u|^2 I``.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from ambc_sim.model import SUPPORTED_TAG_ANTENNAS


class UnsupportedOrderError(ValueError):
    """Raised for a code order without a real orthogonal design."""

    def __init__(self, order: int, scheme: str = "coherent"):
        if scheme == "differential":
            message = f"differential code supports M = 2 only, got M={order}"
        else:
            message = (
                f"no real orthogonal design of order {order}: one exists if and only if "
                "M = 2, 4, 8 (M = 1 is the single-antenna case)"
            )
        super().__init__(message)
        self.order = order


def _conj(x: np.ndarray) -> np.ndarray:
    if x.size == 1:
        return x.copy()
    half = x.size // 2
    return np.concatenate([_conj(x[:half]), -x[half:]])


def _multiply(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product (a, b)(c, d) = (ac - d*b, da + bc*)."""
    if x.size == 1:
        return x * y
    half = x.size // 2
    a, b = x[:half], x[half:]
    c, d = y[:half], y[half:]
    return np.concatenate([
        _multiply(a, c) - _multiply(_conj(d), b),
        _multiply(d, a) + _multiply(b, _conj(c)),
    ])


@lru_cache(maxsize=None)
def design_tensor(order: int) -> np.ndarray:
    """Integer tensor A of shape (order, order, order) with X(u) = sum_k u_k A[k].

    Raises:
        UnsupportedOrderError: If ``order`` is not 1, 2, 4 or 8
    """
    if order not in SUPPORTED_TAG_ANTENNAS:
        raise UnsupportedOrderError(order)
    basis = np.eye(order, dtype=np.int64)
    tensor = np.zeros((order, order, order), dtype=np.int64)
    for k in range(order):
        for j in range(order):
            tensor[k, :, j] = _multiply(basis[k], basis[j])
    tensor.setflags(write=False)
    return tensor


def bpsk_modulate(bits: Sequence[int]) -> np.ndarray:
    """Map bits to BPSK symbols: 0 -> +1, 1 -> -1."""
    b = np.asarray(bits, dtype=np.int64)
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    return 1 - 2 * b


def bpsk_demodulate(symbols: Sequence[int]) -> np.ndarray:
    """Map BPSK decisions back to bits: +1 -> 0, -1 -> 1."""
    return (np.asarray(symbols) < 0).astype(np.int64)


@dataclass(frozen=True)
class CodeBlock:
    """One space-time block.

    Attributes:
        X: (M, J) real matrix, column j transmitted in period j
        u: The BPSK symbols carried by the block (empty for a silent pilot)
        amplitude: Common magnitude applied to the symbols
    """

    X: np.ndarray
    u: Tuple[int, ...] = ()
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        arr = np.array(self.X, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"code block must be a matrix, got shape {arr.shape}")
        if np.any(np.abs(arr) > 1.0):
            raise ValueError("code block entries must satisfy |x| <= 1 (passive reflection)")
        arr.setflags(write=False)
        object.__setattr__(self, "X", arr)

    @property
    def M(self) -> int:
        return self.X.shape[0]

    @property
    def periods(self) -> int:
        return self.X.shape[1]

    @classmethod
    def silent(cls, M: int, periods: int = 1) -> "CodeBlock":
        """All-zero block used as the bias pilot."""
        return cls(X=np.zeros((M, periods)))


def encode_coherent_block(u: Sequence[int], amplitude: float = 1.0) -> CodeBlock:
    """Encode M BPSK symbols into an order-M real orthogonal block.

    Args:
        u: M symbols in {+1, -1}
        amplitude: Symbol magnitude in (0, 1]

    Returns:
        CodeBlock with ``X^T X = amplitude^2 * M * I``

    Raises:
        UnsupportedOrderError: If ``len(u)`` is not 1, 2, 4 or 8
    """
    symbols = np.asarray(u, dtype=np.int64)
    if symbols.ndim != 1:
        raise ValueError("symbols must be a 1-D sequence")
    if np.any(np.abs(symbols) != 1):
        raise ValueError("coherent blocks carry BPSK symbols in {+1, -1}")
    if not 0 < amplitude <= 1:
        raise ValueError(f"amplitude must lie in (0, 1], got {amplitude}")
    tensor = design_tensor(symbols.size)
    x_int = np.tensordot(symbols, tensor, axes=1)
    return CodeBlock(X=amplitude * x_int, u=tuple(int(s) for s in symbols), amplitude=amplitude)


# Differential alphabet in the fixed enumeration order used for tie-breaking.
DIFF_ALPHABET: Tuple[Tuple[int, int], ...] = ((1, 0), (0, -1), (0, 1), (-1, 0))
_DIFF_BITS: Tuple[Tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


def diff_map(b1: int, b2: int) -> Tuple[int, int]:
    """Map two bits to the differential transition vector [B1, B2]."""
    try:
        return DIFF_ALPHABET[_DIFF_BITS.index((int(b1), int(b2)))]
    except ValueError:
        raise ValueError(f"bits must be 0 or 1, got ({b1}, {b2})") from None


def diff_unmap(vector: Sequence[int]) -> Tuple[int, int]:
    """Inverse of :func:`diff_map`."""
    key = (int(vector[0]), int(vector[1]))
    try:
        return _DIFF_BITS[DIFF_ALPHABET.index(key)]
    except ValueError:
        raise ValueError(f"{key} is not a differential transition vector") from None


@dataclass(frozen=True)
class DiffState:
    """Symbol pair of the last transmitted differential block."""

    prev_u: Tuple[int, int] = (1, 1)

    def __post_init__(self) -> None:
        pair = tuple(int(v) for v in self.prev_u)
        if len(pair) != 2 or any(v not in (-1, 1) for v in pair):
            raise ValueError(f"differential state must be a pair in {{+1, -1}}, got {self.prev_u}")
        object.__setattr__(self, "prev_u", pair)


def diff_next_block(
    state: DiffState, b1: int, b2: int, amplitude: float = 1.0
) -> Tuple[CodeBlock, DiffState]:
    """Advance the differential recursion by one block.

    [u'1, u'2] = B1 [u1, u2] + B2 [-u2, u1] with [B1, B2] = diff_map(b1, b2).
    """
    big_b1, big_b2 = diff_map(b1, b2)
    u1, u2 = state.prev_u
    nxt = (big_b1 * u1 - big_b2 * u2, big_b1 * u2 + big_b2 * u1)
    return encode_coherent_block(nxt, amplitude), DiffState(prev_u=nxt)


def encode_diff_stream(
    bits: Sequence[int], init: DiffState = DiffState(), amplitude: float = 1.0
) -> List[CodeBlock]:
    """Encode an even-length bit stream, reference block first.

    Returns:
        ``1 + len(bits) // 2`` blocks; the first carries ``init`` and no data
    """
    if len(bits) % 2:
        raise ValueError(f"differential bit stream must have even length, got {len(bits)}")
    blocks = [encode_coherent_block(init.prev_u, amplitude)]
    state = init
    for i in range(0, len(bits), 2):
        block, state = diff_next_block(state, bits[i], bits[i + 1], amplitude)
        blocks.append(block)
    return blocks
