"""End-to-end tests for the pathovox command-line tool."""

import filecmp
import json
import os
import subprocess
import sys
import tempfile

BIN = os.environ["PATHOVOX_BIN"]


def run(*args, expect=0):
    proc = subprocess.run([BIN, *args], capture_output=True, text=True)
    assert proc.returncode == expect, (
        f"{args}: exit {proc.returncode}, expected {expect}\n"
        f"stdout: {proc.stdout}\nstderr: {proc.stderr}")
    return proc


def write_fake_manifest(path, healthy, pathological):
    with open(path, "w") as fh:
        fh.write("file_path,label,split\n")
        for i in range(healthy):
            fh.write(f"h{i}.wav,healthy,\n")
        for i in range(pathological):
            fh.write(f"p{i}.wav,pathological,\n")


def test_split(tmp):
    manifest = os.path.join(tmp, "svd_shaped.csv")
    write_fake_manifest(manifest, 687, 1356)
    out = os.path.join(tmp, "split.csv")
    proc = run("split", "--manifest", manifest, "--seed", "4", "--out", out)
    assert "train 480/480 val 103/103 test 104/773" in proc.stdout

    proc = run("split", "--manifest", os.path.join(tmp, "nope.csv"), "--out", out, expect=2)
    assert "not found" in proc.stderr

    run("split", "--manifest", manifest, "--train", "0.9", "--val", "0.2", "--out", out,
        expect=2)


def test_synth_determinism(tmp):
    a = os.path.join(tmp, "synth_a")
    b = os.path.join(tmp, "synth_b")
    for out in (a, b):
        run("synth", "--out", out, "--healthy", "4", "--pathological", "4", "--seed", "7",
            "--rate", "8000")
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert len([n for n in names if n.endswith(".wav")]) == 8
    for name in names:
        assert filecmp.cmp(os.path.join(a, name), os.path.join(b, name), shallow=False), name

    empty = os.path.join(tmp, "synth_empty")
    run("synth", "--out", empty)
    assert os.listdir(empty) == ["manifest.csv"]


def make_trained_model(tmp):
    corpus = os.path.join(tmp, "corpus")
    run("synth", "--out", corpus, "--healthy", "8", "--pathological", "8", "--seed", "3",
        "--rate", "8000")
    split_csv = os.path.join(corpus, "split.csv")
    run("split", "--manifest", os.path.join(corpus, "manifest.csv"), "--train", "0.5",
        "--val", "0.25", "--seed", "3", "--out", split_csv)
    config = os.path.join(tmp, "run.cfg")
    with open(config, "w") as fh:
        fh.write("frame_features=512\nconv1_filters=4\nconv1_kernel=9\n"
                 "conv2_filters=3\nconv2_kernel=9\nlstm_units=4\ndense_units=8\n"
                 "initial_lr=1e-3\nmax_epochs=2\nseed=3\n")
    model = os.path.join(tmp, "model.ckpt")
    log = os.path.join(tmp, "epochs.jsonl")
    proc = run("train", "--manifest", split_csv, "--config", config, "--out-model", model,
               "--log", log)
    assert "best epoch" in proc.stdout
    return corpus, split_csv, config, model, log


def test_train_evaluate_inspect(tmp):
    corpus, split_csv, config, model, log = make_trained_model(tmp)

    with open(log) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    assert 1 <= len(lines) <= 2
    assert lines[0]["epoch"] == 1
    assert os.path.exists(model + ".json")

    report_path = os.path.join(tmp, "report.json")
    proc = run("evaluate", "--model", model, "--manifest", split_csv, "--subset", "test",
               "--report", report_path)
    assert "confusion matrix" in proc.stdout
    with open(report_path) as fh:
        report = json.load(fh)
    assert report["total"] == 4  # 8 per class, train 4/4 and val 2/2 leave 2/2 for test
    assert 0.0 <= report["accuracy"] <= 1.0

    proc = run("inspect", "--model", model)
    table_from_model = proc.stdout
    proc = run("inspect", "--config", config)
    assert table_from_model == proc.stdout
    assert "total trainable parameters:" in table_from_model

    # corrupting the magic must be rejected with exit 2
    bad = os.path.join(tmp, "bad.ckpt")
    with open(model, "rb") as fh:
        payload = bytearray(fh.read())
    payload[0] = ord("Q")
    with open(bad, "wb") as fh:
        fh.write(payload)
    run("evaluate", "--model", bad, "--manifest", split_csv, expect=2)
    run("inspect", "--model", bad, expect=2)


def test_reference_inspect(tmp):
    config = os.path.join(tmp, "ref.cfg")
    with open(config, "w") as fh:
        fh.write("# reference configuration\n")
    proc = run("inspect", "--config", config)
    last = [l for l in proc.stdout.splitlines() if l.strip()][-1]
    assert last == "total trainable parameters: 428772"


def test_train_requires_subsets(tmp):
    corpus = os.path.join(tmp, "unsplit")
    run("synth", "--out", corpus, "--healthy", "2", "--pathological", "2", "--seed", "5",
        "--rate", "8000")
    model = os.path.join(tmp, "should_not_exist.ckpt")
    run("train", "--manifest", os.path.join(corpus, "manifest.csv"), "--out-model", model,
        expect=2)
    assert not os.path.exists(model)


def test_train_determinism(tmp):
    def one_run(tag):
        sub = os.path.join(tmp, tag)
        os.makedirs(sub)
        corpus, split_csv, config, model, log = make_trained_model(sub)
        with open(model, "rb") as fh:
            ckpt = fh.read()
        with open(log) as fh:
            lines = []
            for line in fh:
                if line.strip():
                    entry = json.loads(line)
                    entry.pop("wall_seconds")
                    lines.append(entry)
        return ckpt, lines

    ckpt_a, log_a = one_run("run_a")
    ckpt_b, log_b = one_run("run_b")
    assert ckpt_a == ckpt_b
    assert log_a == log_b


def test_unknown_usage():
    run("frobnicate", expect=2)
    run(expect=2)


def main():
    cases = [test_split, test_synth_determinism, test_train_evaluate_inspect,
             test_reference_inspect, test_train_requires_subsets, test_train_determinism]
    with tempfile.TemporaryDirectory(prefix="pathovox_cli_") as tmp:
        for index, case in enumerate(cases):
            sub = os.path.join(tmp, f"t{index}")
            os.makedirs(sub)
            case(sub)
        test_unknown_usage()
    print("cli tests passed")


if __name__ == "__main__":
    sys.exit(main())
