#!/usr/bin/env python3
"""Independent reference for the splitmix64 stream used by the random host
and batch seed derivation. Prints values frozen into the C++ tests."""

M = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def stream(seed):
    state = seed & M
    while True:
        state = (state + GOLDEN) & M
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        yield z ^ (z >> 31)


def first(seed, k):
    g = stream(seed)
    return [next(g) for _ in range(k)]


RANDOM_HOST_SALT = 0x52414E44484F5354  # "RANDHOST"

if __name__ == "__main__":
    print("splitmix64(0) first 3:", [hex(v) for v in first(0, 3)])
    print("splitmix64(42) first 5:", [hex(v) for v in first(42, 5)])
    print("random host seed 42 n=4 (salted):",
          [v % 4 for v in first(42 ^ RANDOM_HOST_SALT, 5)])
    print("derive_seed(0,0):", hex(first(0 ^ 0, 1)[0]))
    print("derive_seed(7,i) i=0..9:", [hex(first(7 ^ i, 1)[0]) for i in range(10)])
    print("distinct:", len({first(7 ^ i, 1)[0] for i in range(10)}))
