#!/usr/bin/env python3
# Copyright (c) 2026, The gbfa-sim Authors
# SPDX-License-Identifier: Apache-2.0
"""Export autodiff reference gradients for the C++ backprop tests.

Writes a tiny graph in the neutral dataset format plus, per model, a
checkpoint directory (manifest.json + weights.f32) with reference.json (loss)
and grads.f64 (gradients in the same layout as weights.f32: per layer weight,
bias, then eps for GIN layers; float64 little-endian).

    python3 tools/export_gradient_fixtures.py --out tests/fixtures/grad
"""

import argparse
import json
import math
import pathlib

import numpy as np
import torch

NUM_NODES = 24
NUM_EDGES = 40
FEATURE_DIM = 12
NUM_CLASSES = 3

MODELS = {
    "gcn": ("gcn", [("GCNConv", 12, 8, "relu"), ("GCNConv", 8, 6, "relu"), ("GCNConv", 6, 3, "none")]),
    "sage": ("sage", [("SAGEConv-mean", 12, 8, "relu"), ("SAGEConv-mean", 8, 3, "none")]),
    "gin": ("gin", [("GIN-MLP", 12, 8, "relu"), ("GIN-MLP", 8, 8, "relu"), ("Linear", 8, 3, "none")]),
    "mlp": ("mlp", [("Linear", 12, 8, "relu"), ("Linear", 8, 3, "none")]),
    "gcn-zero": ("gcn", [("GCNConv", 12, 8, "relu"), ("GCNConv", 8, 3, "none")]),
}


def make_graph(rng):
    edges = set()
    while len(edges) < NUM_EDGES:
        u, v = rng.integers(0, NUM_NODES, size=2)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    edges = sorted(edges)
    feats = rng.random((NUM_NODES, FEATURE_DIM)).astype(np.float32)
    feats[rng.random(feats.shape) < 0.5] = 0.0
    labels = rng.integers(0, NUM_CLASSES, size=NUM_NODES).astype(np.uint32)
    order = rng.permutation(NUM_NODES)
    masks = np.zeros((3, NUM_NODES), dtype=np.uint8)
    masks[0, order[:10]] = 1
    masks[1, order[10:16]] = 1
    masks[2, order[16:]] = 1
    return edges, feats, labels, masks


def write_graph(out, edges, feats, labels, masks):
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": "grad-fixture",
        "num_nodes": NUM_NODES,
        "num_edges": len(edges),
        "feature_dim": FEATURE_DIM,
        "num_classes": NUM_CLASSES,
        "masks_present": True,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    feats.astype("<f4").tofile(out / "features.f32")
    np.array(edges, dtype="<u4").tofile(out / "edges.u32")
    labels.astype("<u4").tofile(out / "labels.u32")
    masks.astype("u1").tofile(out / "masks.u8")


def operators(edges):
    n = NUM_NODES
    adj = torch.zeros((n, n), dtype=torch.float64)
    for u, v in edges:
        adj[u, v] = 1.0
        adj[v, u] = 1.0
    deg = adj.sum(1)
    inv = 1.0 / torch.sqrt(deg + 1.0)
    a_hat = inv[:, None] * (adj + torch.eye(n, dtype=torch.float64)) * inv[None, :]
    mean = torch.where(deg[:, None] > 0, adj / deg.clamp(min=1.0)[:, None], torch.zeros_like(adj))
    # the C++ side stores operator values as FP32
    return a_hat.float().double(), mean.float().double(), adj


def forward(layers, params, x, ops):
    a_hat, mean, adj = ops
    h = x
    for (kind, _, _, act), p in zip(layers, params):
        t = h @ p["w"]
        if kind == "GCNConv":
            z = a_hat @ t
        elif kind == "SAGEConv-mean":
            z = t + mean @ t
        elif kind == "GIN-MLP":
            z = (1.0 + p["eps"]) * t + adj @ t
        else:
            z = t
        z = z + p["b"]
        h = torch.relu(z) if act == "relu" else z
    return h


def export(out, name, kind, layers, x, labels, mask, ops, rng, zero):
    params = []
    for lk, fin, fout, _ in layers:
        scale = math.sqrt(6.0 / (fin + fout))
        w = np.zeros((fin, fout), np.float32) if zero else rng.uniform(-scale, scale, (fin, fout)).astype(np.float32)
        b = np.zeros(fout, np.float32) if zero else rng.uniform(-0.1, 0.1, fout).astype(np.float32)
        p = {
            "w": torch.tensor(w, dtype=torch.float64, requires_grad=True),
            "b": torch.tensor(b, dtype=torch.float64, requires_grad=True),
        }
        if lk == "GIN-MLP":
            eps = np.float32(0.0 if zero else rng.uniform(-0.3, 0.3))
            p["eps"] = torch.tensor(float(eps), dtype=torch.float64, requires_grad=True)
        params.append(p)

    logits = forward(layers, params, x, ops)
    idx = torch.tensor(np.nonzero(mask)[0])
    loss = torch.nn.functional.cross_entropy(logits[idx], torch.tensor(labels[idx].astype(np.int64)))
    loss.backward()

    d = out / name
    d.mkdir(parents=True, exist_ok=True)
    weights, grads = [], []
    for (lk, _, _, _), p in zip(layers, params):
        weights += [p["w"].detach().numpy().ravel(), p["b"].detach().numpy().ravel()]
        grads += [p["w"].grad.numpy().ravel(), p["b"].grad.numpy().ravel()]
        if lk == "GIN-MLP":
            weights.append(np.array([p["eps"].item()]))
            grads.append(np.array([p["eps"].grad.item()]))
    np.concatenate(weights).astype("<f4").tofile(d / "weights.f32")
    np.concatenate(grads).astype("<f8").tofile(d / "grads.f64")

    counts = [fin * fout for _, fin, fout, _ in layers]
    manifest = {
        "format": "gbfa-checkpoint-v1",
        "model": kind,
        "dataset": "grad-fixture",
        "seed": 0,
        "layers": [
            {
                "kind": lk,
                "in_dim": fin,
                "out_dim": fout,
                "activation": act,
                "weight_count": fin * fout,
                "bias_count": fout,
                "has_eps": lk == "GIN-MLP",
            }
            for lk, fin, fout, act in layers
        ],
        "layer_weight_counts": counts,
        "total_trained_weights": sum(counts),
        "hyperparams": {"learning_rate": 0.0, "weight_decay": 0.0, "max_epochs": 0, "patience": 0, "dropout": 0.0},
        "best_epoch": 0,
        "val_accuracy": 0.0,
        "test_accuracy": 0.0,
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    reference = {"loss": loss.item(), "mask": "train", "framework": f"torch {torch.__version__}", "dtype": "float64"}
    (d / "reference.json").write_text(json.dumps(reference, indent=2) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, type=pathlib.Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    edges, feats, labels, masks = make_graph(rng)
    write_graph(args.out / "graph", edges, feats, labels, masks)
    ops = operators(edges)
    x = torch.tensor(feats, dtype=torch.float64)
    for name, (kind, layers) in MODELS.items():
        export(args.out, name, kind, layers, x, labels, masks[0], ops, rng, zero=name.endswith("-zero"))


if __name__ == "__main__":
    main()
