"""Rebuild tests/data/verbal_aggression.csv from the ``rdatasets`` wheel.

Source: lme4's ``VerbAgg`` data (long format, one row per person-item).
The dichotomous ``r2`` response (Y/N) is pivoted to one row per person
with 24 item columns in their original order plus ``Gender`` (F/M).

Usage::

    pip download --no-deps -d /tmp/wheel rdatasets
    python scripts/make_verbal_csv.py /tmp/wheel/rdatasets-*.whl tests/data/verbal_aggression.csv

Needs pandas, which is not a package dependency.
"""

import lzma
import pickle
import sys
import zipfile

MEMBER = "rdatasets/_data/lme4/VerbAgg.pkl.compress"


def main(wheel, out):
    with zipfile.ZipFile(wheel) as z:
        df = pickle.loads(lzma.decompress(z.read(MEMBER)))
    order = list(dict.fromkeys(df["item"]))
    wide = df.pivot(index="id", columns="item", values="r2")[order]
    wide = wide.replace({"Y": 1, "N": 0}).astype(int)
    gender = df.drop_duplicates("id").set_index("id").loc[wide.index, "Gender"]
    wide["Gender"] = gender.to_numpy()
    wide.to_csv(out, index=False)


if __name__ == "__main__":
    main(*sys.argv[1:3])
