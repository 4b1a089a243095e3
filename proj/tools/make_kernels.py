#!/usr/bin/env python3
"""Writes the placeholder blur kernel bank to data/kernels/.

Kernels a-h are seeded random-walk motion blurs. Tap weights are visit
counts raised to a power p, found by bisection so that the normalized
kernel (taps summing to 1) has the requested Frobenius norm. Kernel i is a
7x7 Gaussian whose sigma is bisected the same way; j is a 7x7 box.
"""
import argparse
import pathlib

import numpy as np

MOTION = {
    "a": 0.2246, "b": 0.1933, "c": 0.1907, "d": 0.1778,
    "e": 0.2255, "f": 0.2163, "g": 0.1917, "h": 0.1737,
}
GAUSSIAN_NORM = 0.1763
SIZE = 15


def frob(taps):
    t = taps / taps.sum()
    return float(np.sqrt((t * t).sum()))


def bisect(fn, lo, hi, target, increasing=True):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (fn(mid) < target) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_walk(seed, steps=80):
    rng = np.random.default_rng(seed)
    counts = np.zeros((SIZE, SIZE))
    pos = np.array([SIZE // 2, SIZE // 2], dtype=float)
    vel = rng.normal(size=2)
    vel /= np.linalg.norm(vel)
    for _ in range(steps):
        vel += 0.35 * rng.normal(size=2)
        vel /= np.linalg.norm(vel)
        nxt = pos + 0.5 * vel
        if np.any(nxt < 0) or np.any(nxt > SIZE - 1):
            vel = -vel
            nxt = pos + 0.5 * vel
        pos = nxt
        r, c = np.rint(pos).astype(int)
        counts[r, c] += 1.0
    return counts


def motion_kernel(name, target, seed):
    counts = random_walk(seed)
    support = counts > 0
    if 1.0 / np.sqrt(support.sum()) >= target:
        raise SystemExit(f"kernel {name}: support too small for norm {target}")
    shaped = lambda p: np.where(support, counts, 0.0) ** p * support
    p = bisect(lambda p: frob(shaped(p)), 0.0, 20.0, target)
    taps = shaped(p)
    return taps / taps.sum()


def gaussian_kernel(target, size=7):
    ax = np.arange(size) - size // 2
    g = lambda s: np.exp(-0.5 * (ax[:, None] ** 2 + ax[None, :] ** 2) / s ** 2)
    # Frobenius norm decreases as sigma grows.
    s = bisect(lambda s: frob(g(s)), 0.3, 10.0, target, increasing=False)
    taps = g(s)
    return taps / taps.sum(), s


def write(path, taps, comment):
    h, w = taps.shape
    lines = [f"{h} {w}"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in taps]
    path.write_text("\n".join(lines) + "\n")
    print(f"{path.name}: {comment}, frobenius {frob(taps):.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data" / "kernels",
                    type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for i, (name, target) in enumerate(MOTION.items()):
        write(args.out / f"{name}.txt", motion_kernel(name, target, 1000 + i), "motion")
    taps, s = gaussian_kernel(GAUSSIAN_NORM)
    write(args.out / "i.txt", taps, f"gaussian sigma={s:.4f}")
    write(args.out / "j.txt", np.full((7, 7), 1.0 / 49.0), "box 7x7")


if __name__ == "__main__":
    main()
