"""Reference trace for tiny2.model.json, evaluated scalar by scalar.

Written independently of the C++ implementation: plain loops over Python
floats, no shared code. Regenerate with

    python3 make_tiny2_golden.py > tiny2.golden.json
"""
import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))

GOLDEN_INPUT = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, -0.5, 0.25],
]


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


def gate(w, b, hx, k):
    total = b[k]
    for j in range(len(hx)):
        total += w[k][j] * hx[j]
    return total


def step(layer, x, c_prev, h_prev):
    units = layer["units"]
    hx = list(h_prev) + list(x)
    f = [sigmoid(gate(layer["W_f"], layer["b_f"], hx, k)) for k in range(units)]
    i = [sigmoid(gate(layer["W_i"], layer["b_i"], hx, k)) for k in range(units)]
    g = [math.tanh(gate(layer["W_c"], layer["b_c"], hx, k)) for k in range(units)]
    o = [sigmoid(gate(layer["W_o"], layer["b_o"], hx, k)) for k in range(units)]
    c = [f[k] * c_prev[k] + i[k] * g[k] for k in range(units)]
    h = [o[k] * math.tanh(c[k]) for k in range(units)]
    return {"f": f, "i": i, "o": o, "c": c, "h": h}


def main():
    with open(os.path.join(HERE, "tiny2.model.json")) as fh:
        model = json.load(fh)
    lstm, dense = model["layers"]
    units = lstm["units"]

    first = step(lstm, [1.0, 0.0, 0.0], [0.0] * units, [0.0] * units)

    c = [0.0] * units
    h = [0.0] * units
    steps = []
    for x in GOLDEN_INPUT:
        s = step(lstm, x, c, h)
        steps.append(s)
        c, h = s["c"], s["h"]

    logits = []
    for r in range(len(dense["b"])):
        z = dense["b"][r]
        for j in range(units):
            z += dense["W"][r][j] * h[j]
        logits.append(z)
    m = max(logits)
    exps = [math.exp(z - m) for z in logits]
    probs = [e / sum(exps) for e in exps]
    predicted = max(range(len(logits)), key=lambda k: (logits[k], -k))

    print(json.dumps({
        "step_x1": first,
        "input": GOLDEN_INPUT,
        "steps": steps,
        "logits": logits,
        "probabilities": probs,
        "predicted_class": predicted,
    }, indent=2))


if __name__ == "__main__":
    main()
