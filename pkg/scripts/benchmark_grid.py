"""Generate and run the benchmark manifest for the headline result grid:
AWGN+SPIN at sigma in {10, 30} x spin in {0.3, 0.5} and AWGN+RVIN at
sigma=30, r=0.3, over whichever canonical images are available. Standard
names (lena, barbara) are picked up from $RWE_IMAGE_DIR or data/images/ when
present; bundled exports (camera, ...) fill in otherwise. Writes the manifest
next to the CSV so the run is reproducible by hand with `rwe bench`."""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from rwe.cli import main as cli_main

DATA_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "data", "images")
CANONICAL = ("lena", "barbara", "camera", "moon", "coins")


def find_images():
    found = []
    roots = [os.environ.get("RWE_IMAGE_DIR"), DATA_DIR]
    for name in CANONICAL:
        for root in roots:
            if not root:
                continue
            for ext in (".pgm", ".png", ".ppm"):
                path = os.path.join(root, name + ext)
                if os.path.isfile(path):
                    found.append((name, os.path.abspath(path)))
                    break
            else:
                continue
            break
    return found


def write_manifest(path, images, rules):
    lines = ["[defaults]", "kind = spin", "seed = 7", "rules = " + rules, ""]
    for _, img in images:
        lines += ["[run]", "image = " + img, "sigma = 10, 30", "spin = 0.3, 0.5", ""]
    for _, img in images:
        lines += ["[run]", "image = " + img, "kind = rvin",
                  "sigma = 30", "spin = 0", "rvin = 0.3", ""]
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="benchmark_grid.csv")
    ap.add_argument("--rules", default="pareto",
                    help="comma list: pareto,rcsr,ones (ablation sweep)")
    ap.add_argument("--manifest-only", action="store_true",
                    help="write the manifest and stop")
    args = ap.parse_args()

    images = find_images()
    if not images:
        print("no images found; run scripts/export_test_images.py or set "
              "$RWE_IMAGE_DIR", file=sys.stderr)
        return 3
    print("images: " + ", ".join(name for name, _ in images))
    manifest = os.path.splitext(args.out)[0] + ".manifest"
    write_manifest(manifest, images, args.rules)
    print("manifest: %s" % manifest)
    if args.manifest_only:
        return 0
    return cli_main(["bench", manifest, "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
