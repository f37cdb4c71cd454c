"""End-to-end run of the command-line tool: preprocess, train, eval, grid, exit codes."""

import os
import random
import struct
import subprocess
import sys
import tempfile

CLI = sys.argv[1]


def run(*args, expect=0):
    proc = subprocess.run([CLI, *args], capture_output=True, text=True)
    if proc.returncode != expect:
        sys.exit(f"{' '.join(args)}: exit {proc.returncode}, expected {expect}\n{proc.stdout}\n{proc.stderr}")
    return proc.stdout


def write_inputs(d):
    rng = random.Random(1)
    with open(os.path.join(d, "inter.tsv"), "w") as f:
        f.write("userID\titemID\trating\ttimestamp\n")
        for u in range(40):
            for t, i in enumerate(rng.sample(range(15), 8)):
                f.write(f"u{u:02d}\ti{i + 15 * (u % 2):02d}\t4\t{t}\n")
    for name in ("text", "image"):
        with open(os.path.join(d, f"{name}.mmf1"), "wb") as f:
            f.write(b"MMF1" + struct.pack("<II", 30, 2))
            for i in range(30):
                f.write(struct.pack("<ff", float(i < 15), float(i >= 15)))
        with open(os.path.join(d, f"{name}_ids.txt"), "w") as f:
            f.write("".join(f"i{i:02d}\n" for i in range(30)))


def main():
    with tempfile.TemporaryDirectory() as d:
        write_inputs(d)
        base = ("interactions: inter.tsv\nk: 3\nmax_epochs: 3\nbatch_size: 64\nembedding_dim: 8\n"
                "modal_dim: 4\ntopk: [5, 10]\nfeatures.text: text.mmf1,text_ids.txt\n"
                "features.image: image.mmf1,image_ids.txt\n")
        with open(os.path.join(d, "one.cfg"), "w") as f:
            f.write(base + "model: vbpr_mm\n")
        with open(os.path.join(d, "grid.cfg"), "w") as f:
            f.write(base + "model: graph_mm\nfusion: [concat, mean]\nn_layers: [1, 2]\n")
        with open(os.path.join(d, "bad.cfg"), "w") as f:
            f.write(base + "colour: blue\n")

        run("preprocess", "--interactions", os.path.join(d, "inter.tsv"), "--k", "3", "--out", os.path.join(d, "ds"))
        meta = open(os.path.join(d, "ds", "meta")).read()
        assert "n_users=40" in meta, meta

        out = run("train", "--config", os.path.join(d, "one.cfg"), "--out", os.path.join(d, "train"))
        assert "recall" in out, out
        assert os.path.exists(os.path.join(d, "train", "train_log.tsv"))

        report = os.path.join(d, "eval.tsv")
        run("eval", "--checkpoint", os.path.join(d, "train", "checkpoint"), "--data",
            os.path.join(d, "train", "dataset"), "--split", "test", "--topk", "5,10,20", "--out", report)
        evaluated = open(report).read()
        trained = open(os.path.join(d, "train", "test_report.tsv")).read()
        assert evaluated == trained, (evaluated, trained)

        run("grid", "--config", os.path.join(d, "grid.cfg"), "--out", os.path.join(d, "grid"), "--jobs", "2")
        rows = open(os.path.join(d, "grid", "summary.tsv")).read().splitlines()
        assert len(rows) == 6 and rows[-1].startswith("# best: "), rows

        run("grid", "--config", os.path.join(d, "bad.cfg"), "--out", os.path.join(d, "bad"), expect=2)
        run("train", "--config", os.path.join(d, "missing.cfg"), "--out", os.path.join(d, "x"), expect=1)
        run("frobnicate", expect=2)
    print("cli smoke ok")


if __name__ == "__main__":
    main()
