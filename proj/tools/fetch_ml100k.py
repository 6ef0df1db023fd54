#!/usr/bin/env python3
# Copyright 2026 The attrimix Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Fetch MovieLens-100K and write it in the MovieLens-1M `::` layout.

The RecBole wheel on PyPI ships ml-100k as tab-separated atomic files, which
works where only a package mirror is reachable. Output:
ratings.dat, users.dat, movies.dat.
"""

import argparse
import csv
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

WHEEL = "recbole==1.2.1"
PREFIX = "recbole/dataset_example/ml-100k/ml-100k."


def read_atomic(raw):
    rows = list(csv.reader(io.StringIO(raw.decode("utf-8")), delimiter="\t",
                           quoting=csv.QUOTE_NONE))
    header = [h.split(":")[0] for h in rows[0]]
    return [dict(zip(header, r)) for r in rows[1:] if r]


def load_from_wheel(wheel_dir):
    wheels = sorted(pathlib.Path(wheel_dir).glob("recbole-*.whl"))
    if not wheels:
        sys.exit("no recbole wheel found in " + str(wheel_dir))
    with zipfile.ZipFile(wheels[0]) as z:
        return {kind: read_atomic(z.read(PREFIX + kind))
                for kind in ("inter", "user", "item")}


def convert(tables, out):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ratings.dat", "w", newline="\n") as f:
        for r in tables["inter"]:
            f.write("{}::{}::{}::{}\n".format(
                r["user_id"], r["item_id"], int(float(r["rating"])),
                int(float(r["timestamp"]))))
    with open(out / "users.dat", "w", newline="\n") as f:
        for r in tables["user"]:
            # Raw ages; the loader buckets them.
            f.write("{}::{}::{}::{}::{}\n".format(
                r["user_id"], r["gender"], r["age"], r["occupation"],
                r["zip_code"]))
    with open(out / "movies.dat", "w", newline="\n") as f:
        for r in tables["item"]:
            title = r["movie_title"].replace("::", ":")
            year = r.get("release_year", "").strip()
            if year.isdigit():
                title = "{} ({})".format(title, year)
            genres = "|".join(r.get("class", "").split()) or "unknown"
            f.write("{}::{}::{}\n".format(r["item_id"], title, genres))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/ml-100k", type=pathlib.Path)
    ap.add_argument("--wheel-dir", type=pathlib.Path,
                    help="directory holding an already downloaded wheel")
    args = ap.parse_args()
    if args.wheel_dir:
        tables = load_from_wheel(args.wheel_dir)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                            "--only-binary=:all:", "-d", tmp, WHEEL], check=True)
            tables = load_from_wheel(tmp)
    convert(tables, args.out)
    print("wrote {} ratings, {} users, {} movies to {}".format(
        len(tables["inter"]), len(tables["user"]), len(tables["item"]), args.out))


if __name__ == "__main__":
    main()
