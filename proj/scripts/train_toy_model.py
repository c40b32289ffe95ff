# Copyright 2026 The emfisim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Trains the toy CNN fixture used by the test and acceptance suites.

The task is synthetic: ten fixed smooth templates, each sample is one
template plus Gaussian noise. The trained weights are exported as an FP32
weight blob + JSON manifest, together with a held-out eval set (raw float32
inputs + JSON index). Everything is seeded, so re-running the script
reproduces the committed fixtures.

The topology is chosen for the fault studies, not for accuracy: a narrow
three-level conv hierarchy (little channel redundancy, so front-chunk
corruption compounds through depth) feeding a wide two-layer classifier head
(lots of parameter redundancy, so back-chunk corruption averages out). That
is the same asymmetry full-scale CNNs exhibit.

Usage: python scripts/train_toy_model.py [out_dir]
"""

import json
import sys
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

SEED = 21
NUM_CLASSES = 10
IMG = 16
TRAIN_PER_CLASS = 400
EVAL_PER_CLASS = 50
NOISE_SIGMA = 1.1


def make_templates(rng: np.random.Generator) -> np.ndarray:
    raw = rng.normal(0.0, 1.0, size=(NUM_CLASSES, IMG, IMG)).astype(np.float32)
    # Light box blur so the classes have spatial structure a 3x3 conv can use.
    blurred = np.zeros_like(raw)
    for k in range(NUM_CLASSES):
        padded = np.pad(raw[k], 1, mode="edge")
        for dy in range(3):
            for dx in range(3):
                blurred[k] += padded[dy : dy + IMG, dx : dx + IMG]
        blurred[k] /= 9.0
        blurred[k] /= np.abs(blurred[k]).max()
    return blurred


def make_split(rng, templates, per_class):
    xs, ys = [], []
    for label in range(NUM_CLASSES):
        noise = rng.normal(0.0, NOISE_SIGMA, size=(per_class, IMG, IMG))
        xs.append(templates[label][None, :, :] + noise)
        ys.append(np.full(per_class, label))
    x = np.concatenate(xs).astype(np.float32)[:, None, :, :]
    y = np.concatenate(ys).astype(np.int64)
    order = rng.permutation(len(y))
    return x[order], y[order]


class ToyNet(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 8, 3, padding=1)
        self.conv2 = nn.Conv2d(8, 16, 3, padding=1)
        self.conv3 = nn.Conv2d(16, 32, 3, padding=1)
        self.pool = nn.MaxPool2d(2)
        self.fc1 = nn.Linear(32 * 2 * 2, 256)
        self.fc2 = nn.Linear(256, NUM_CLASSES)

    def forward(self, x):
        x = self.pool(torch.relu(self.conv1(x)))
        x = self.pool(torch.relu(self.conv2(x)))
        x = self.pool(torch.relu(self.conv3(x)))
        x = torch.relu(self.fc1(torch.flatten(x, 1)))
        return self.fc2(x)


def train(model, x, y):
    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    loss_fn = nn.CrossEntropyLoss()
    xb = torch.from_numpy(x)
    yb = torch.from_numpy(y)
    for epoch in range(60):
        perm = torch.randperm(len(yb))
        total = 0.0
        for i in range(0, len(yb), 128):
            idx = perm[i : i + 128]
            opt.zero_grad()
            loss = loss_fn(model(xb[idx]), yb[idx])
            loss.backward()
            opt.step()
            total += loss.item()
        if epoch % 10 == 9:
            with torch.no_grad():
                acc = (model(xb).argmax(1) == yb).float().mean().item()
            print(f"epoch {epoch + 1}: loss {total:.3f} train acc {acc:.4f}")


def export(model, eval_x, eval_y, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    tensors = [
        ("conv1.weight", model.conv1.weight.detach().numpy()),
        ("conv1.bias", model.conv1.bias.detach().numpy()),
        ("conv2.weight", model.conv2.weight.detach().numpy()),
        ("conv2.bias", model.conv2.bias.detach().numpy()),
        ("conv3.weight", model.conv3.weight.detach().numpy()),
        ("conv3.bias", model.conv3.bias.detach().numpy()),
        ("fc1.weight", model.fc1.weight.detach().numpy()),
        ("fc1.bias", model.fc1.bias.detach().numpy()),
        ("fc2.weight", model.fc2.weight.detach().numpy()),
        ("fc2.bias", model.fc2.bias.detach().numpy()),
    ]

    blob = bytearray()
    manifest = []
    for name, array in tensors:
        data = array.astype("<f4").tobytes()
        manifest.append(
            {
                "name": name,
                "shape": list(array.shape),
                "format": "fp32",
                "byte_offset": len(blob),
                "byte_length": len(data),
                "quant": None,
            }
        )
        blob += data

    (out_dir / "toy_weights.bin").write_bytes(bytes(blob))
    (out_dir / "toy_manifest.json").write_text(
        json.dumps({"tensors": manifest}, indent=2) + "\n"
    )

    model_doc = {
        "input_shape": [1, IMG, IMG],
        "num_classes": NUM_CLASSES,
        "layers": [
            {"kind": "conv2d", "weight": "conv1.weight", "bias": "conv1.bias",
             "stride": 1, "padding": 1},
            {"kind": "relu"},
            {"kind": "maxpool2d", "kernel": 2, "stride": 2},
            {"kind": "conv2d", "weight": "conv2.weight", "bias": "conv2.bias",
             "stride": 1, "padding": 1},
            {"kind": "relu"},
            {"kind": "maxpool2d", "kernel": 2, "stride": 2},
            {"kind": "conv2d", "weight": "conv3.weight", "bias": "conv3.bias",
             "stride": 1, "padding": 1},
            {"kind": "relu"},
            {"kind": "maxpool2d", "kernel": 2, "stride": 2},
            {"kind": "flatten"},
            {"kind": "dense", "weight": "fc1.weight", "bias": "fc1.bias"},
            {"kind": "relu"},
            {"kind": "dense", "weight": "fc2.weight", "bias": "fc2.bias"},
        ],
    }
    (out_dir / "toy_model.json").write_text(json.dumps(model_doc, indent=2) + "\n")

    (out_dir / "toy_eval.bin").write_bytes(eval_x.astype("<f4").tobytes())
    (out_dir / "toy_eval.json").write_text(
        json.dumps(
            {
                "seed": SEED,
                "input_shape": [1, IMG, IMG],
                "labels": eval_y.tolist(),
                "blob": "toy_eval.bin",
            }
        )
        + "\n"
    )
    print(f"wrote fixtures to {out_dir} (blob {len(blob)} bytes, "
          f"{len(eval_y)} eval images)")


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("tests/fixtures")
    np_rng = np.random.default_rng(SEED)
    torch.manual_seed(SEED)

    templates = make_templates(np_rng)
    train_x, train_y = make_split(np_rng, templates, TRAIN_PER_CLASS)
    eval_x, eval_y = make_split(np_rng, templates, EVAL_PER_CLASS)

    model = ToyNet()
    train(model, train_x, train_y)
    with torch.no_grad():
        acc = (model(torch.from_numpy(eval_x)).argmax(1) ==
               torch.from_numpy(eval_y)).float().mean().item()
    print(f"eval accuracy: {acc:.4f}")
    if acc < 0.9:
        raise SystemExit("fixture model trained below the 0.9 floor; adjust hyperparameters")

    export(model, eval_x, eval_y, out_dir)


if __name__ == "__main__":
    main()
