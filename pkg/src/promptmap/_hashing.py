"""Integer hash primitives shared by the mock backends and seeded layouts.

Pure-integer implementations so outputs are bitwise identical across
platforms and Python builds.  Constants are fixed; persisted corpora and
seeded layouts depend on them.
"""

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def splitmix64_stream(seed: int, count: int) -> list[int]:
    """First `count` outputs of a splitmix64 generator."""
    state = seed & _MASK64
    out = []
    for _ in range(count):
        state = (state + SPLITMIX_GAMMA) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        out.append(z)
    return out


def unit_open_upper(word: int) -> float:
    """Map a 64-bit word to [0, 1) with 53-bit resolution."""
    return (word >> 11) * 2.0**-53


def unit_open_lower(word: int) -> float:
    """Map a 64-bit word to (0, 1] with 53-bit resolution (log-safe)."""
    return ((word >> 11) + 1) * 2.0**-53
