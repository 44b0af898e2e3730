#!/usr/bin/env python3
"""Regenerates the bundled test assets from scikit-image sample data.

Outputs (under assets/):
  photos/{camera,astronaut,chelsea}.png   square crops, downsampled
  two_halves.png                          left black, right white
  toy_labels.mask / toy_labels.txt        4x4 label map, areas {2,6,8}
  meta/train/*.png, meta/heldout/*.png    32x32 grayscale corpus
"""

import argparse
import struct
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data, transform, util

META_SOURCES = ["astronaut", "camera", "chelsea", "coffee", "coins", "rocket",
                "clock", "moon", "immunohistochemistry", "hubble_deep_field",
                "page", "retina", "brick", "gravel", "grass", "text"]


def gray(img):
    img = util.img_as_float(img)
    if img.ndim == 3:
        img = img[..., :3].mean(axis=2)
    return img


def center_square(img):
    h, w = img.shape[:2]
    s = min(h, w)
    y0, x0 = (h - s) // 2, (w - s) // 2
    return img[y0:y0 + s, x0:x0 + s]


def to_u8(img):
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def resize(img, size):
    return transform.resize(img, (size, size), anti_aliasing=True, order=3)


def write_photos(out, size):
    out.mkdir(parents=True, exist_ok=True)
    photos = {"camera": data.camera(), "astronaut": data.astronaut(), "chelsea": data.chelsea()}
    for name, img in photos.items():
        img = resize(util.img_as_float(center_square(img)), size)
        Image.fromarray(to_u8(img)).save(out / f"{name}.png")


def write_meta(out, n_train, n_heldout, crop, size, seed):
    rng = np.random.default_rng(seed)
    (out / "train").mkdir(parents=True, exist_ok=True)
    (out / "heldout").mkdir(parents=True, exist_ok=True)
    sources = [gray(getattr(data, name)()) for name in META_SOURCES]

    # Training crops come from the left three quarters of each source and
    # held-out crops from the right quarter, so the two sets never overlap.
    def draw(count, heldout):
        made = attempt = 0
        while made < count:
            img = sources[attempt % len(sources)]
            attempt += 1
            h, w = img.shape
            split = (3 * w) // 4
            lo, hi = (split, w - crop) if heldout else (0, split - crop)
            if hi < lo or h < crop:
                raise SystemExit("source too small for the crop size")
            y = int(rng.integers(0, h - crop + 1))
            x = int(rng.integers(lo, hi + 1))
            patch = resize(img[y:y + crop, x:x + crop], size)
            if patch.std() < 0.02:
                continue  # skip blank patches
            yield made, patch
            made += 1

    for i, patch in draw(n_train, False):
        Image.fromarray(to_u8(patch)).save(out / "train" / f"{i:03d}.png")
    for i, patch in draw(n_heldout, True):
        Image.fromarray(to_u8(patch)).save(out / "heldout" / f"{i:03d}.png")


def write_toy(out):
    labels = np.array([[1, 1, 1, 2], [1, 0, 0, 2], [1, 1, 2, 2], [2, 2, 2, 2]], dtype=np.uint16)
    h, w = labels.shape
    with open(out / "toy_labels.mask", "wb") as f:
        f.write(b"MASK" + struct.pack("<III", h, w, 3) + labels.astype("<u2").tobytes())
    (out / "toy_labels.txt").write_text(
        "k=3\nheight=4\nwidth=4\nrule=segmentation\nprovenance=hand-written toy map, areas 2/6/8\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "assets")
    ap.add_argument("--photo-size", type=int, default=128)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    write_photos(args.out / "photos", args.photo_size)
    halves = np.zeros((32, 32), dtype=np.uint8)
    halves[:, 16:] = 255
    Image.fromarray(halves).save(args.out / "two_halves.png")
    write_toy(args.out)
    write_meta(args.out / "meta", 64, 16, crop=96, size=32, seed=args.seed)


if __name__ == "__main__":
    main()
