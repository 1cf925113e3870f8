"""
Arithmetic in GF(2^w) for the hash families.

Field elements are integers in [0, 2^w). The modulus for width w is the
numerically smallest irreducible polynomial of degree w with a nonzero constant
term (polynomials encoded as integers, bit j = coefficient of x^j). It is found
once per width with Rabin's irreducibility test and cached, so every platform
uses the same table. `polynomial_table` lists it.

Widths up to 16 also get log/antilog tables for vectorized multiplication.
"""

from functools import lru_cache
from typing import Dict, Iterable

import numpy as np

MAX_WIDTH = 64
TABLE_WIDTH = 16


def clmul(a: int, b: int) -> int:
    """Carry-less product of two polynomials over GF(2)."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        a <<= 1
        b >>= 1
    return result


def poly_mod(a: int, modulus: int) -> int:
    degree = modulus.bit_length() - 1
    while a.bit_length() - 1 >= degree:
        a ^= modulus << (a.bit_length() - 1 - degree)
    return a


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def _mulmod(a: int, b: int, modulus: int) -> int:
    return poly_mod(clmul(a, b), modulus)


def _frobenius_power(modulus: int, times: int) -> int:
    """x^(2^times) mod modulus."""
    value = 0b10
    for _ in range(times):
        value = _mulmod(value, value, modulus)
    return value


def _prime_factors(n: int) -> Iterable[int]:
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            factors.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        factors.append(n)
    return factors


def is_irreducible(poly: int) -> bool:
    """Rabin's test for a polynomial over GF(2) of degree >= 1."""
    degree = poly.bit_length() - 1
    if degree < 1:
        return False
    if degree == 1:
        return True
    if _frobenius_power(poly, degree) != poly_mod(0b10, poly):
        return False
    for q in _prime_factors(degree):
        h = _frobenius_power(poly, degree // q) ^ 0b10
        if poly_gcd(poly, poly_mod(h, poly)) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible_polynomial(width: int) -> int:
    """Smallest irreducible polynomial of the given degree with constant term 1."""
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"Field width must be in [1, {MAX_WIDTH}], got {width}")
    candidate = (1 << width) | 1
    while not is_irreducible(candidate):
        candidate += 2
    return candidate


def polynomial_table(widths: Iterable[int]) -> Dict[int, str]:
    """Human-readable modulus table, e.g. {3: 'x^3 + x + 1'}."""
    table = {}
    for w in widths:
        poly = irreducible_polynomial(w)
        terms = []
        for j in range(w, -1, -1):
            if (poly >> j) & 1:
                terms.append("1" if j == 0 else ("x" if j == 1 else f"x^{j}"))
        table[w] = " + ".join(terms)
    return table


class GF2m:
    """The field GF(2^w) with the canonical modulus for w."""

    def __init__(self, width: int):
        self.width = width
        self.order = 1 << width
        self.modulus = irreducible_polynomial(width)
        self._log = None
        self._exp = None
        if width <= TABLE_WIDTH:
            self._build_tables()

    def mul(self, a: int, b: int) -> int:
        return poly_mod(clmul(a, b), self.modulus)

    def power(self, a: int, e: int) -> int:
        result = 1
        while e:
            if e & 1:
                result = self.mul(result, a)
            a = self.mul(a, a)
            e >>= 1
        return result

    def _generator(self) -> int:
        group_order = self.order - 1
        if group_order == 1:
            return 1
        factors = _prime_factors(group_order)
        for g in range(2, self.order):
            if all(self.power(g, group_order // q) != 1 for q in factors):
                return g
        raise ArithmeticError(f"No generator found for GF(2^{self.width})")

    def _build_tables(self) -> None:
        group_order = self.order - 1
        g = self._generator()
        exp = np.zeros(2 * group_order, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        value = 1
        for e in range(group_order):
            exp[e] = value
            log[value] = e
            value = self.mul(value, g)
        exp[group_order:] = exp[:group_order]
        self._exp = exp
        self._log = log

    @property
    def has_tables(self) -> bool:
        return self._log is not None

    def mul_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product of broadcastable integer arrays (table widths only)."""
        if not self.has_tables:
            raise ValueError(f"No log tables for width {self.width}")
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        product = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, product)

    def powers(self, points: np.ndarray, count: int) -> np.ndarray:
        """Matrix P[j, p] = points[p]^j for j < count."""
        points = [int(p) for p in np.asarray(points).ravel()]
        table = np.zeros((count, len(points)), dtype=np.int64)
        for col, point in enumerate(points):
            value = 1
            for j in range(count):
                table[j, col] = value
                value = self.mul(value, point)
        return table
