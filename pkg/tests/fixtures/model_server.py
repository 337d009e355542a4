#!/usr/bin/env python3
"""Line-delimited JSON model server used by the test suite.

Stands in for a user's external model: reads one JSON request per line
on stdin, writes one JSON response per line on stdout. Never imports
the library under test. Misbehavior modes exercise the client's
transport-error handling.
"""

import argparse
import json
import sys

import numpy as np


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--task", choices=["classification", "regression"],
                    default="regression")
    ap.add_argument("--mode", choices=["linear", "logistic", "echo"],
                    default="linear")
    ap.add_argument("--coef", type=float, nargs="*", default=[2.0])
    ap.add_argument("--intercept", type=float, default=0.0)
    ap.add_argument("--n-features", type=int, default=None)
    ap.add_argument("--behave", choices=["ok", "garbage", "hang", "wrong-id",
                                         "error-proba", "die"],
                    default="ok")
    args = ap.parse_args()

    coef = np.asarray(args.coef, dtype=np.float64)
    n_features = args.n_features if args.n_features is not None else len(coef)

    def respond(obj):
        sys.stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")
        sys.stdout.flush()

    for raw in sys.stdin:
        req = json.loads(raw)
        rid = req["id"]
        op = req["op"]

        if op == "info":
            respond({"id": rid, "task": args.task, "n_features": n_features})
            if args.behave == "die":
                return
            continue

        if args.behave == "hang":
            continue
        if args.behave == "garbage":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        if args.behave == "wrong-id":
            respond({"id": rid + 1000, "predictions": []})
            continue

        rows = np.asarray(req["rows"], dtype=np.float64)
        if op == "predict":
            if args.mode == "echo":
                values = rows[:, 0]
            elif args.mode == "logistic":
                p1 = sigmoid(rows @ coef + args.intercept)
                values = (p1 >= 0.5).astype(np.int64)
            else:
                values = rows @ coef + args.intercept
            respond({"id": rid, "predictions": values.tolist()})
        elif op == "predict_proba":
            if args.behave == "error-proba" or args.mode != "logistic":
                respond({"id": rid, "error": "probabilities not available"})
                continue
            p1 = sigmoid(rows @ coef + args.intercept)
            proba = np.column_stack([1.0 - p1, p1])
            respond({"id": rid, "probabilities": proba.tolist()})
        else:
            respond({"id": rid, "error": f"unknown op {op!r}"})


if __name__ == "__main__":
    main()
