#!/usr/bin/env python3
"""Writes the example model graphs and a per-layer hand-summed count sheet.

The sheet is computed here from the layer descriptions alone (2 FLOPs per
MAC, pool/activation free), independently of the C++ accounting code, and is
committed next to the graphs as the reference for the accounting tests.
"""
import csv
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


class Builder:
    def __init__(self, channels, height, width):
        self.input = {"channels": channels, "height": height, "width": width}
        self.layers = [{"id": "input", "kind": "input"}]
        self.edges = []
        self.groups = []
        # hand accounting: id -> (channels, h, w) of the layer output
        self.shape = {"input": (channels, height, width)}
        self.sheet = []

    def add(self, layer, producers):
        self.layers.append(layer)
        for p in producers:
            self.edges.append([p, layer["id"]])
        c, h, w = self.shape[producers[0]]
        kind = layer["kind"]
        params = flops = 0
        if kind == "conv":
            k, s = layer["kernel"], layer.get("stride", 1)
            pad = k // 2
            oh, ow = (h + 2 * pad - k) // s + 1, (w + 2 * pad - k) // s + 1
            out = layer["out"]
            params = out * c * k * k + (out if layer.get("bias") else 0)
            flops = 2 * out * oh * ow * c * k * k
            self.shape[layer["id"]] = (out, oh, ow)
        elif kind == "batchnorm":
            params, flops = 2 * c, 2 * c * h * w
            self.shape[layer["id"]] = (c, h, w)
        elif kind == "activation":
            self.shape[layer["id"]] = (c, h, w)
        elif kind == "pool":
            if layer.get("global"):
                self.shape[layer["id"]] = (c, 1, 1)
            else:
                k = layer.get("kernel", 2)
                self.shape[layer["id"]] = (c, (h - k) // k + 1, (w - k) // k + 1)
        elif kind == "linear":
            fin, out = c * h * w, layer["out"]
            params = fin * out + (out if layer.get("bias") else 0)
            flops = 2 * fin * out
            self.shape[layer["id"]] = (out, 1, 1)
        elif kind == "add_join":
            flops = (len(producers) - 1) * c * h * w
            self.shape[layer["id"]] = (c, h, w)
        elif kind == "output":
            self.shape[layer["id"]] = (c, h, w)
        self.sheet.append((layer["id"], kind, params, flops))
        return layer["id"]

    def doc(self):
        return {"format_version": "1", "input": self.input, "layers": self.layers,
                "edges": self.edges, "groups": self.groups}


def vgg16_cifar():
    b = Builder(3, 32, 32)
    cfg = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512]
    prev, conv_i, pool_i = "input", 0, 0
    for v in cfg:
        if v == "M":
            pool_i += 1
            prev = b.add({"id": f"pool{pool_i}", "kind": "pool", "kernel": 2}, [prev])
            continue
        conv_i += 1
        c = b.add({"id": f"conv{conv_i}", "kind": "conv", "out": v, "kernel": 3, "prunable": True}, [prev])
        n = b.add({"id": f"bn{conv_i}", "kind": "batchnorm"}, [c])
        prev = b.add({"id": f"relu{conv_i}", "kind": "activation"}, [n])
    prev = b.add({"id": "avgpool", "kind": "pool", "global": True}, [prev])
    prev = b.add({"id": "fc", "kind": "linear", "out": 10, "bias": True}, [prev])
    b.add({"id": "output", "kind": "output"}, [prev])
    return b


def preresnet_stage(blocks=3, planes=16, expansion=4):
    b = Builder(3, 32, 32)
    stem = b.add({"id": "stem", "kind": "conv", "out": planes, "kernel": 3, "prunable": True}, ["input"])
    prev = stem
    internal, last = [], []
    for i in range(1, blocks + 1):
        p = f"b{i}_"
        x = prev
        t = b.add({"id": p + "bn1", "kind": "batchnorm"}, [x])
        t = b.add({"id": p + "relu1", "kind": "activation"}, [t])
        t = b.add({"id": p + "conv1", "kind": "conv", "out": planes, "kernel": 1, "prunable": True}, [t])
        t = b.add({"id": p + "bn2", "kind": "batchnorm"}, [t])
        t = b.add({"id": p + "relu2", "kind": "activation"}, [t])
        t = b.add({"id": p + "conv2", "kind": "conv", "out": planes, "kernel": 3, "prunable": True}, [t])
        t = b.add({"id": p + "bn3", "kind": "batchnorm"}, [t])
        t = b.add({"id": p + "relu3", "kind": "activation"}, [t])
        t = b.add({"id": p + "conv3", "kind": "conv", "out": planes * expansion, "kernel": 1, "prunable": True}, [t])
        internal += [p + "conv1", p + "conv2"]
        last.append(p + "conv3")
        shortcut = x
        if i == 1:
            shortcut = b.add({"id": p + "shortcut", "kind": "conv", "out": planes * expansion, "kernel": 1,
                              "prunable": True}, [x])
            last.append(shortcut)
        prev = b.add({"id": p + "add", "kind": "add_join"}, [t, shortcut])
        last.append(prev)
    t = b.add({"id": "bn_final", "kind": "batchnorm"}, [prev])
    t = b.add({"id": "relu_final", "kind": "activation"}, [t])
    t = b.add({"id": "avgpool", "kind": "pool", "global": True}, [t])
    t = b.add({"id": "fc", "kind": "linear", "out": 10, "bias": True}, [t])
    b.add({"id": "output", "kind": "output"}, [t])
    b.groups = [{"name": "stage1_internal", "kind": "sequential_internal", "members": internal},
                {"name": "stage1_last", "kind": "post_addition", "members": last}]
    return b


def main():
    rows = []
    for name, builder in (("vgg16_cifar", vgg16_cifar()), ("preresnet_bottleneck_stage", preresnet_stage())):
        with open(os.path.join(HERE, name + ".json"), "w") as f:
            json.dump(builder.doc(), f, indent=2)
            f.write("\n")
        for layer_id, kind, params, flops in builder.sheet:
            rows.append((name, layer_id, kind, params, flops))
        rows.append((name, "TOTAL", "", sum(r[2] for r in builder.sheet), sum(r[3] for r in builder.sheet)))
    with open(os.path.join(HERE, "expected_counts.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["graph", "layer_id", "kind", "params", "flops"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
