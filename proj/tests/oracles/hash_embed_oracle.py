"""Independent re-derivation of the hash embedder and the 3-gram Jaccard score.

Used once to produce the frozen constants in tests/unit/test_embedding.cpp and
tests/unit/test_pipeline.cpp. Shares no code with the C++ implementation.
"""
import math

MASK = (1 << 64) - 1
BOUNDARY = 0x02


def mix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def trigrams(text):
    cps = [BOUNDARY] + [ord(c.lower()) if c.isascii() else ord(c) for c in text] + [BOUNDARY]
    return [(cps[i] << 42) | (cps[i + 1] << 21) | cps[i + 2] for i in range(len(cps) - 2)]


def hash_embed(text, dim, seed):
    key = mix64(seed)
    acc = [0.0] * dim
    for g in trigrams(text):
        h = mix64(g ^ key)
        acc[h % dim] += -1.0 if h >> 63 else 1.0
    norm = math.sqrt(sum(v * v for v in acc))
    return [v / norm for v in acc]


def cosine(a, b):
    return sum(x * y for x, y in zip(a, b))


def jaccard(a, b):
    sa, sb = set(trigrams(a)), set(trigrams(b))
    return len(sa & sb) / len(sa | sb)


if __name__ == "__main__":
    e = hash_embed("earthquake engineering", 256, 7)
    s = hash_embed("earthquake safety", 256, 7)
    m = hash_embed("baroque music", 256, 7)
    print("cos(eng, safety) = %.9f" % cosine(e, s))
    print("cos(eng, music)  = %.9f" % cosine(e, m))
    v = hash_embed("abc", 64, 7)
    print("abc nonzero buckets:", [(i, round(x, 9)) for i, x in enumerate(v) if x != 0.0])
    print("jaccard(abcd, bcde) = %.9f" % jaccard("abcd", "bcde"))
