"""Prime-field arithmetic over a configurable modulus.

Supports both the 256-bit production curve and small toy primes so that
every higher layer can be cross-checked exhaustively against naive
big-integer arithmetic.  All values are kept in canonical form
(0 <= value < modulus) at all times.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, NonInvertibleError

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# Witnesses giving a deterministic Miller-Rabin test for all n < 3.3 * 10^24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

_EXACT_PRIMALITY_BOUND = 1 << 20


def _miller_rabin(n: int, bases) -> bool:
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in bases:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_prime(n: int) -> bool:
    """Primality check: exact by trial division below 2**20, Miller-Rabin above."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    if n < _EXACT_PRIMALITY_BOUND:
        f = 41
        while f * f <= n:
            if n % f == 0:
                return False
            f += 2
        return True
    return _miller_rabin(n, _MR_WITNESSES)


@dataclass(frozen=True)
class FieldParams:
    """A prime modulus together with its register width in bits."""

    modulus: int
    bit_width: int

    def __post_init__(self):
        if self.modulus < 3 or self.modulus % 2 == 0:
            raise ConfigError(f"modulus must be an odd prime, got {self.modulus}")
        if not is_prime(self.modulus):
            raise ConfigError(f"modulus {self.modulus} is not prime")
        if self.bit_width != self.modulus.bit_length():
            raise ConfigError(
                f"bit_width {self.bit_width} does not match modulus bit length "
                f"{self.modulus.bit_length()}"
            )

    @classmethod
    def from_modulus(cls, modulus: int) -> "FieldParams":
        return cls(modulus, modulus.bit_length())

    def element(self, value: int) -> "FieldElement":
        """Reduce an arbitrary integer into a canonical field element."""
        return FieldElement(value % self.modulus, self)


@dataclass(frozen=True)
class FieldElement:
    """Canonical residue modulo a prime.  Use FieldParams.element to reduce."""

    value: int
    params: FieldParams

    def __post_init__(self):
        if not 0 <= self.value < self.params.modulus:
            raise ConfigError(f"value {self.value} not canonical mod {self.params.modulus}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        return fe_add(self, other)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        return fe_sub(self, other)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        return fe_mul(self, other)

    def __neg__(self) -> "FieldElement":
        return fe_neg(self)


def _check_params(a: FieldElement, b: FieldElement):
    if a.params.modulus != b.params.modulus:
        raise ConfigError(
            f"mixed field parameters: {a.params.modulus} vs {b.params.modulus}"
        )


def fe_add(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_params(a, b)
    return FieldElement((a.value + b.value) % a.params.modulus, a.params)


def fe_neg(a: FieldElement) -> FieldElement:
    return FieldElement(-a.value % a.params.modulus, a.params)


def fe_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_params(a, b)
    return FieldElement((a.value - b.value) % a.params.modulus, a.params)


def fe_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_params(a, b)
    return FieldElement(a.value * b.value % a.params.modulus, a.params)


def fe_inv(a: FieldElement) -> FieldElement:
    """Inverse by exponentiation a**(p-2); valid for every prime modulus."""
    if a.value == 0:
        raise NonInvertibleError("zero has no inverse")
    p = a.params.modulus
    return FieldElement(pow(a.value, p - 2, p), a.params)
