"""Convert the 28x28 CalTech 101 Silhouettes .mat file into the binary CSV that load_csv_binary reads.

    curl -LO https://people.cs.umass.edu/~marlin/data/caltech101_silhouettes_28_split1.mat
    python scripts/convert_caltech_silhouettes.py caltech101_silhouettes_28_split1.mat

The train, val and test splits are concatenated. Images are stored
column-major in the .mat file, so each row is transposed to row-major.
"""

import argparse
import pathlib

import numpy as np
from scipy.io import loadmat

from dbmtune.data import BinaryDataset, write_csv_binary

SPLITS = ("train_data", "val_data", "test_data")


def convert(mat_path, out_path, side=28):
    mat = loadmat(mat_path)
    rows = np.concatenate([np.asarray(mat[key]) for key in SPLITS if key in mat])
    images = rows.reshape(-1, side, side).transpose(0, 2, 1).reshape(-1, side * side)
    images = (images > 0.5).astype(np.uint8)
    write_csv_binary(BinaryDataset(images, side, side, str(mat_path)), out_path)
    return len(images)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("mat")
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent
                                             / "data" / "caltech101_silhouettes_28.csv"))
    args = parser.parse_args()
    print(f"wrote {convert(args.mat, args.out)} images to {args.out}")


if __name__ == "__main__":
    main()
