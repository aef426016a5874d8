"""Build data/mnist5k-images-idx3-ubyte.gz from the 5,000-image MNIST sample bundled with mlxtend.

The sample ships as mlxtend/data/data/mnist_5k.csv.gz inside the mlxtend
wheel (784 grayscale pixels then the label per row). Labels are dropped and
raw 0-255 pixels are kept, so the usual threshold applies at load time.

    pip download mlxtend==0.24.0 --no-deps -d /tmp/dl
    python scripts/make_mnist_subset.py /tmp/dl/mlxtend-0.24.0-py3-none-any.whl
"""

import argparse
import gzip
import io
import pathlib
import zipfile

import numpy as np

from dbmtune.data import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("wheel")
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent
                                             / "data" / "mnist5k-images-idx3-ubyte.gz"))
    args = parser.parse_args()
    with zipfile.ZipFile(args.wheel) as zf:
        raw = gzip.decompress(zf.read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    pixels = table[:, :784]
    if pixels.min() < 0 or pixels.max() > 255:
        raise SystemExit("unexpected pixel range")
    write_idx(args.out, pixels.astype(np.uint8), 28, 28)
    print(f"wrote {pixels.shape[0]} images to {args.out}")


if __name__ == "__main__":
    main()
