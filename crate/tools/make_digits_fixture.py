#!/usr/bin/env python3
"""Generate the digits fixture: a small trained classifier plus a test batch.

Builds a synthetic ten-class digit dataset (seven-segment style glyphs on a
28x28 grid with random shifts, intensity jitter, and pixel dropout), trains a
784-16-16-10 ReLU network on it with plain numpy SGD, quantizes the weights
to four decimals, and writes:

    fixtures/digits/net.net      the quantized network in the text format
    fixtures/digits/images.idx   100 held-out images, IDX magic 2051
    fixtures/digits/labels.idx   their labels, IDX magic 2049

The script is deterministic (fixed seed) and self-checking: it re-runs the
quantized network exactly as the Rust side will read it and insists on at
least 90% accuracy over the exported batch.
"""

import struct
import sys
from pathlib import Path

import numpy as np

SEED = 20250817
SIDE = 28
PIXELS = SIDE * SIDE
HIDDEN = 16
CLASSES = 10
TRAIN_PER_CLASS = 300
TEST_PER_CLASS = 10
EPOCHS = 12
BATCH = 32
LR = 0.08

# Seven-segment layout on the 28x28 grid. Each segment is a thick line;
# digits light the classic segment subsets.
TOP, TR, BR, BOT, BL, TL, MID = range(7)
SEGMENTS = {
    0: {TOP, TR, BR, BOT, BL, TL},
    1: {TR, BR},
    2: {TOP, TR, MID, BL, BOT},
    3: {TOP, TR, MID, BR, BOT},
    4: {TL, MID, TR, BR},
    5: {TOP, TL, MID, BR, BOT},
    6: {TOP, TL, MID, BL, BR, BOT},
    7: {TOP, TR, BR},
    8: {TOP, TR, BR, BOT, BL, TL, MID},
    9: {TOP, TR, BR, BOT, TL, MID},
}


def glyph(digit: int) -> np.ndarray:
    """Render the base glyph for a digit as a 28x28 float image in [0, 1]."""
    img = np.zeros((SIDE, SIDE))
    r0, r1, rm = 5, 23, 14  # top, bottom, middle rows of the segment box
    c0, c1 = 9, 19          # left, right columns
    t = 2                   # stroke thickness
    strokes = {
        TOP: (slice(r0, r0 + t), slice(c0, c1 + t)),
        BOT: (slice(r1 - t + 1, r1 + 1), slice(c0, c1 + t)),
        MID: (slice(rm, rm + t), slice(c0, c1 + t)),
        TL: (slice(r0, rm + t), slice(c0, c0 + t)),
        BL: (slice(rm, r1 + 1), slice(c0, c0 + t)),
        TR: (slice(r0, rm + t), slice(c1, c1 + t)),
        BR: (slice(rm, r1 + 1), slice(c1, c1 + t)),
    }
    for seg in SEGMENTS[digit]:
        img[strokes[seg]] = 1.0
    return img


def sample(rng: np.random.Generator, digit: int) -> np.ndarray:
    """One noisy u8 image of a digit: shifted, dimmed, speckled."""
    img = glyph(digit)
    dr, dc = rng.integers(-3, 4, size=2)
    img = np.roll(np.roll(img, dr, axis=0), dc, axis=1)
    img *= rng.uniform(0.7, 1.0)                       # global intensity
    img *= rng.uniform(0.85, 1.0, size=img.shape)      # per-pixel texture
    img[rng.random(img.shape) < 0.05] = 0.0            # dropout speckle
    return np.round(img * 255).astype(np.uint8)


def batch_of(rng: np.random.Generator, per_class: int):
    images, labels = [], []
    for digit in range(CLASSES):
        for _ in range(per_class):
            images.append(sample(rng, digit))
            labels.append(digit)
    order = rng.permutation(len(images))
    x = np.stack(images)[order]
    y = np.array(labels, dtype=np.uint8)[order]
    return x, y


def train(x: np.ndarray, y: np.ndarray, rng: np.random.Generator):
    """SGD on softmax cross-entropy; returns the three weight/bias pairs."""
    xf = x.reshape(len(x), PIXELS) / 255.0
    w1 = rng.normal(0, np.sqrt(2.0 / PIXELS), (HIDDEN, PIXELS))
    b1 = np.zeros(HIDDEN)
    w2 = rng.normal(0, np.sqrt(2.0 / HIDDEN), (HIDDEN, HIDDEN))
    b2 = np.zeros(HIDDEN)
    w3 = rng.normal(0, np.sqrt(2.0 / HIDDEN), (CLASSES, HIDDEN))
    b3 = np.zeros(CLASSES)

    n = len(xf)
    for epoch in range(EPOCHS):
        order = rng.permutation(n)
        for start in range(0, n, BATCH):
            idx = order[start : start + BATCH]
            xb, yb = xf[idx], y[idx]
            # Forward.
            z1 = xb @ w1.T + b1
            a1 = np.maximum(z1, 0)
            z2 = a1 @ w2.T + b2
            a2 = np.maximum(z2, 0)
            z3 = a2 @ w3.T + b3
            z3 -= z3.max(axis=1, keepdims=True)
            p = np.exp(z3)
            p /= p.sum(axis=1, keepdims=True)
            # Backward.
            g3 = p.copy()
            g3[np.arange(len(idx)), yb] -= 1.0
            g3 /= len(idx)
            gw3 = g3.T @ a2
            gb3 = g3.sum(axis=0)
            g2 = (g3 @ w3) * (z2 > 0)
            gw2 = g2.T @ a1
            gb2 = g2.sum(axis=0)
            g1 = (g2 @ w2) * (z1 > 0)
            gw1 = g1.T @ xb
            gb1 = g1.sum(axis=0)
            w3 -= LR * gw3
            b3 -= LR * gb3
            w2 -= LR * gw2
            b2 -= LR * gb2
            w1 -= LR * gw1
            b1 -= LR * gb1
        pred = forward(xf, (w1, b1, w2, b2, w3, b3)).argmax(axis=1)
        print(f"epoch {epoch + 1}: train accuracy {np.mean(pred == y):.4f}")
    return w1, b1, w2, b2, w3, b3


def forward(xf: np.ndarray, params):
    w1, b1, w2, b2, w3, b3 = params
    a1 = np.maximum(xf @ w1.T + b1, 0)
    a2 = np.maximum(a1 @ w2.T + b2, 0)
    return a2 @ w3.T + b3


def quantize(params):
    """Round every parameter to 4 decimals via its printed form, exactly as
    the text file will be read back."""
    return tuple(np.vectorize(lambda v: float(f"{v:.4f}"))(p) for p in params)


def render_net(params) -> str:
    w1, b1, w2, b2, w3, b3 = params
    lines = [
        "# 28x28 digit classifier, two hidden layers of 16.",
        "name digits",
        f"widths {PIXELS} {HIDDEN} {HIDDEN} {CLASSES}",
        "activations identity relu relu identity",
    ]
    for s, (w, b) in enumerate(((w1, b1), (w2, b2), (w3, b3)), start=1):
        lines.append(f"weights {s}")
        for row in w:
            lines.append(" ".join(f"{v:.4f}" for v in row))
        lines.append(f"biases {s + 1}")
        lines.append(" ".join(f"{v:.4f}" for v in b))
    return "\n".join(lines) + "\n"


def write_idx(out_dir: Path, images: np.ndarray, labels: np.ndarray):
    with open(out_dir / "images.idx", "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), SIDE, SIDE))
        f.write(images.tobytes())
    with open(out_dir / "labels.idx", "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(labels.tobytes())


def main():
    root = Path(__file__).resolve().parent.parent
    out_dir = root / "fixtures" / "digits"
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(SEED)
    train_x, train_y = batch_of(rng, TRAIN_PER_CLASS)
    test_x, test_y = batch_of(rng, TEST_PER_CLASS)

    params = train(train_x, train_y, rng)
    q = quantize(params)

    test_flat = test_x.reshape(len(test_x), PIXELS) / 255.0
    acc = np.mean(forward(test_flat, q).argmax(axis=1) == test_y)
    zeros = np.mean(test_x == 0)
    print(f"quantized accuracy on the exported batch: {acc:.4f}")
    print(f"zero-pixel share of the exported batch: {zeros:.4f}")
    if acc < 0.9:
        sys.exit("quantized accuracy below 0.9; fixture rejected")

    (out_dir / "net.net").write_text(render_net(q))
    write_idx(out_dir, test_x, test_y)
    print(f"wrote {out_dir / 'net.net'}")
    print(f"wrote {len(test_x)} images and labels under {out_dir}")


if __name__ == "__main__":
    main()
