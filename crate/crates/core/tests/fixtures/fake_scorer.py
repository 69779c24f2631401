#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Deterministic line-protocol scorer used by the integration tests.

Tokens are words and punctuation marks. A token's log-probability is minus
its length; auxiliaries named with --multi-token are reported as spanning
several pieces so callers must fall back to whole-sequence scoring.
"""

import argparse
import json
import re
import sys

TOKEN = re.compile(r"\w+|[^\w\s]")


def tokens(text):
    return [{"text": m.group(), "start": m.start(), "end": m.end()} for m in TOKEN.finditer(text)]


def logprobs(text):
    return [-0.5 * len(t["text"]) for t in tokens(text)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--multi-token", action="append", default=[])
    ap.add_argument("--model-id", default="fake-proto")
    args = ap.parse_args()
    for line in sys.stdin:
        req = json.loads(line)
        op = req["op"]
        if op == "describe":
            reply = {
                "model_id": args.model_id,
                "style": "masked",
                "capabilities": ["sequence_logprob", "masked_candidates", "embeddings"],
            }
        elif op == "tokenize":
            reply = {"tokens": tokens(req["text"])}
        elif op == "token_logprobs":
            lps = logprobs(req["text"])
            reply = {"logprobs": lps, "total": sum(lps), "n_tokens": len(lps)}
        elif op == "position_logprob":
            reply = {"logprob": logprobs(req["text"])[req["position"]]}
        elif op == "masked_candidates":
            bad = [c for c in req["candidates"] if c in args.multi_token]
            if bad:
                reply = {"error": f"{bad[0]} spans several pieces", "kind": "multi_token", "candidate": bad[0]}
            else:
                reply = {"logprobs": {c: -float(len(c)) for c in req["candidates"]}}
        elif op == "embeddings":
            toks = tokens(req["text"])
            reply = {
                "tokens": toks,
                "embeddings": [[float(len(t["text"])), float(t["start"] % 7), float(i)] for i, t in enumerate(toks)],
            }
        else:
            reply = {"error": f"unknown op {op}", "kind": "backend"}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
