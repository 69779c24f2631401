#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Line-protocol scorer backed by a Hugging Face language model.

Reads one JSON request per line on stdin and writes one JSON reply per line
on stdout. Use it through the `proto:` backend, e.g.

    atissue score --out runs/bert \
        --backend "proto:python3 scripts/hf_scorer.py --model bert-base-uncased"

Masked LMs score sequences by pseudo-log-likelihood; causal LMs by the chain
rule. Offsets are Python string indices, i.e. Unicode code points.
"""

import argparse
import json
import sys

import torch
from transformers import AutoModelForCausalLM, AutoModelForMaskedLM, AutoTokenizer

MASK = "[MASK]"


class ScorerError(Exception):
    def __init__(self, message, kind="backend", **extra):
        super().__init__(message)
        self.kind = kind
        self.extra = extra


class Scorer:
    def __init__(self, model, device, batch, causal):
        self.model_id = model
        self.device = torch.device(device)
        self.batch = batch
        self.causal = causal
        self.tok = AutoTokenizer.from_pretrained(model)
        if not self.tok.is_fast:
            raise ScorerError("a fast tokenizer is required for character offsets")
        cls = AutoModelForCausalLM if causal else AutoModelForMaskedLM
        self.model = cls.from_pretrained(model).to(self.device).eval()
        if not causal and self.tok.mask_token_id is None:
            raise ScorerError(f"{model} has no mask token")

    def describe(self, _req):
        caps = ["sequence_logprob", "embeddings"]
        if not self.causal:
            caps.append("masked_candidates")
        return {
            "model_id": self.model_id,
            "style": "causal" if self.causal else "masked",
            "capabilities": caps,
        }

    def encode(self, text):
        enc = self.tok(text, return_offsets_mapping=True, return_tensors="pt")
        ids = enc["input_ids"][0]
        offsets = enc["offset_mapping"][0].tolist()
        content = [i for i, (s, e) in enumerate(offsets) if e > s]
        return ids, offsets, content

    def tokens(self, text, offsets, content):
        return [{"text": text[offsets[i][0]:offsets[i][1]], "start": offsets[i][0], "end": offsets[i][1]} for i in content]

    def tokenize(self, req):
        text = req["text"]
        _, offsets, content = self.encode(text)
        return {"tokens": self.tokens(text, offsets, content)}

    @torch.no_grad()
    def content_logprobs(self, text):
        ids, _, content = self.encode(text)
        if not content:
            raise ScorerError("text has no content tokens")
        if self.causal:
            seq = ids
            shift = 0
            if self.tok.bos_token_id is not None and ids[0].item() != self.tok.bos_token_id:
                seq = torch.cat([torch.tensor([self.tok.bos_token_id]), ids])
                shift = 1
            logits = self.model(seq.unsqueeze(0).to(self.device)).logits[0]
            lp = torch.log_softmax(logits.float(), dim=-1)
            out = []
            for i in content:
                j = i + shift
                if j == 0:
                    raise ScorerError("first token has no left context and the model has no BOS token")
                out.append(lp[j - 1, seq[j]].item())
            return out
        out = []
        for start in range(0, len(content), self.batch):
            chunk = content[start:start + self.batch]
            batch = ids.unsqueeze(0).repeat(len(chunk), 1)
            for row, pos in enumerate(chunk):
                batch[row, pos] = self.tok.mask_token_id
            logits = self.model(batch.to(self.device)).logits
            lp = torch.log_softmax(logits.float(), dim=-1)
            for row, pos in enumerate(chunk):
                out.append(lp[row, pos, ids[pos]].item())
        return out

    def token_logprobs(self, req):
        lps = self.content_logprobs(req["text"])
        return {"logprobs": lps, "total": sum(lps), "n_tokens": len(lps)}

    def position_logprob(self, req):
        lps = self.content_logprobs(req["text"])
        pos = req["position"]
        if not 0 <= pos < len(lps):
            raise ScorerError(f"position {pos} out of range for {len(lps)} tokens")
        return {"logprob": lps[pos]}

    def candidate_id(self, candidate, after_space):
        variants = [" " + candidate, candidate] if after_space else [candidate]
        for v in variants:
            pieces = self.tok.tokenize(v)
            if len(pieces) == 1:
                tid = self.tok.convert_tokens_to_ids(pieces[0])
                if tid == self.tok.unk_token_id:
                    raise ScorerError(f"{candidate} is unknown", kind="unknown_candidate", candidate=candidate)
                return tid
        raise ScorerError(f"{candidate} is not a single token", kind="multi_token", candidate=candidate)

    @torch.no_grad()
    def masked_candidates(self, req):
        if self.causal:
            raise ScorerError("causal models cannot fill a mask", kind="unsupported")
        text = req["masked_text"]
        if text.count(MASK) != 1:
            raise ScorerError("masked text must contain exactly one mask marker")
        at = text.index(MASK)
        after_space = at > 0 and text[at - 1] == " "
        ids = {c: self.candidate_id(c, after_space) for c in req["candidates"]}
        # some tokenizers attach the preceding space to the mask token
        enc = self.tok(text.replace(MASK, self.tok.mask_token), return_tensors="pt")
        input_ids = enc["input_ids"]
        where = (input_ids[0] == self.tok.mask_token_id).nonzero()
        if len(where) != 1:
            raise ScorerError("mask marker did not map to a single mask token")
        logits = self.model(input_ids.to(self.device)).logits[0, where[0, 0]]
        lp = torch.log_softmax(logits.float(), dim=-1)
        return {"logprobs": {c: lp[i].item() for c, i in ids.items()}}

    @torch.no_grad()
    def embeddings(self, req):
        text = req["text"]
        ids, offsets, content = self.encode(text)
        out = self.model(ids.unsqueeze(0).to(self.device), output_hidden_states=True)
        last = out.hidden_states[-1][0]
        return {
            "tokens": self.tokens(text, offsets, content),
            "embeddings": [last[i].float().tolist() for i in content],
        }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", required=True, help="hub id or local directory")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--batch", type=int, default=32, help="masked positions per forward pass")
    ap.add_argument("--causal", action="store_true", help="load a left-to-right LM")
    args = ap.parse_args()
    torch.set_grad_enabled(False)
    scorer = Scorer(args.model, args.device, args.batch, args.causal)
    ops = {
        "describe": scorer.describe,
        "tokenize": scorer.tokenize,
        "token_logprobs": scorer.token_logprobs,
        "position_logprob": scorer.position_logprob,
        "masked_candidates": scorer.masked_candidates,
        "embeddings": scorer.embeddings,
    }
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            op = ops.get(req.get("op"))
            if op is None:
                raise ScorerError(f"unknown op {req.get('op')!r}")
            reply = op(req)
        except ScorerError as e:
            reply = {"error": str(e), "kind": e.kind, **e.extra}
        except Exception as e:  # keep serving after a bad request
            reply = {"error": f"{type(e).__name__}: {e}", "kind": "backend"}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
