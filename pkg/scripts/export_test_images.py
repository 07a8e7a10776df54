"""Dump scikit-image's bundled grayscale photos into data/images/ as PGM so
the bench manifests and demo scripts have something to chew on without any
network access. The canonical 512x512 images the result tables quote (lena,
barbara) are not redistributable here; drop them into the same directory or
point $RWE_IMAGE_DIR at a directory containing them."""

import os
import sys

import numpy as np
from skimage import data

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from rwe.image import save_image

OUT_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "data", "images")

EXPORTS = {
    "camera": data.camera,
    "moon": data.moon,
    "coins": data.coins,
}


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    for name, loader in EXPORTS.items():
        grid = loader().astype(np.float64) / 255.0
        path = os.path.join(OUT_DIR, name + ".pgm")
        save_image(grid, path)
        print("wrote %s %dx%d" % (path, grid.shape[1], grid.shape[0]))


if __name__ == "__main__":
    main()
