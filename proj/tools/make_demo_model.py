#!/usr/bin/env python3
"""Write a small random model (two convs, a dense layer, a batchnorm) for trying the CLI.

usage: make_demo_model.py OUT_DIR [--seed N]
"""

import argparse
import json
import pathlib
import struct

import numpy as np


def write_blob(path, array):
    array = np.ascontiguousarray(array, dtype="<f8")
    header = b"CNRM" + struct.pack("<HBB", 1, 0, array.ndim)
    header += struct.pack("<%dI" % array.ndim, *array.shape)
    path.write_bytes(header + array.tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", type=pathlib.Path)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    write_blob(args.out / "conv1.cnrm", rng.uniform(-1 / 3, 1 / 3, size=(8, 3, 3, 3)))
    write_blob(args.out / "conv2.cnrm", rng.uniform(-1 / 8.5, 1 / 8.5, size=(16, 8, 3, 3)))
    write_blob(args.out / "fc.cnrm", rng.uniform(-0.25, 0.25, size=(10, 16)))
    write_blob(args.out / "bn.gamma.cnrm", rng.uniform(0.5, 1.5, size=16))
    write_blob(args.out / "bn.sigma.cnrm", rng.uniform(0.5, 1.5, size=16))

    manifest = {
        "schema": "convnorm.manifest/1",
        "layers": [
            {"name": "conv1", "kind": "conv2d", "kernel": "conv1.cnrm",
             "input": [32, 32], "stride": 1, "padding": 1},
            {"name": "conv2", "kind": "conv2d", "kernel": "conv2.cnrm",
             "input": [32, 32], "stride": 2, "padding": 1},
            {"name": "bn", "kind": "batchnorm", "gamma": "bn.gamma.cnrm", "sigma": "bn.sigma.cnrm"},
            {"name": "fc", "kind": "dense", "weight": "fc.cnrm", "shape": [10, 16]},
        ],
    }
    (args.out / "model.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(args.out / "model.json")


if __name__ == "__main__":
    main()
