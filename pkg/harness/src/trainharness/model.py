"""A minimal decoder-only transformer whose parts mirror the cost accounting.

Per layer: a layer norm before attention; Q, K and V projections with
biases; h causal self-attention heads of width d/h; an output
projection with bias; a layer norm after attention; and a two-layer
MLP of hidden width w with biases on both layers. Input and output
embeddings share one v-by-d matrix, and a final layer norm closes the
stack.

There are no positional parameters: the cost model books none, so the
network carries none. The causal mask is the only source of order
information, which is enough for throughput measurement and still
trainable in the NoPE sense.
"""

from __future__ import annotations

import math

import torch
from torch import nn

# Shared-embedding logits scale like std * sqrt(d); torch's default
# N(0, 1) embedding init makes initial losses absurd, so use the
# customary small init instead. Recorded in run provenance.
EMBED_INIT_STD = 0.02


class DecoderBlock(nn.Module):
    def __init__(self, d: int, w: int, h: int, s: int):
        super().__init__()
        if d % h:
            raise ValueError(f"d={d} is not divisible by h={h}")
        self.heads = h
        self.norm_attn = nn.LayerNorm(d)
        self.query = nn.Linear(d, d)
        self.key = nn.Linear(d, d)
        self.value = nn.Linear(d, d)
        self.proj = nn.Linear(d, d)
        self.norm_mlp = nn.LayerNorm(d)
        self.up = nn.Linear(d, w)
        self.down = nn.Linear(w, d)
        mask = torch.full((s, s), float("-inf")).triu(1)
        self.register_buffer("causal_mask", mask, persistent=False)

    def _attend(self, x: torch.Tensor) -> torch.Tensor:
        batch, s, d = x.shape
        head_width = d // self.heads

        def split(t):
            return t.view(batch, s, self.heads, head_width).transpose(1, 2)

        q, k, v = split(self.query(x)), split(self.key(x)), split(self.value(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(head_width)
        scores = scores + self.causal_mask[:s, :s]
        mixed = scores.softmax(dim=-1) @ v
        return self.proj(mixed.transpose(1, 2).reshape(batch, s, d))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self._attend(self.norm_attn(x))
        return x + self.down(torch.relu(self.up(self.norm_mlp(x))))


class TinyDecoder(nn.Module):
    """Decoder-only transformer over token ids, logits tied to the embedding."""

    def __init__(self, d: int, n: int, s: int, v: int, w: int, h: int):
        super().__init__()
        self.embed = nn.Embedding(v, d)
        self.embed.weight.data.normal_(0.0, EMBED_INIT_STD)
        self.blocks = nn.ModuleList(DecoderBlock(d, w, h, s) for _ in range(n))
        self.norm_final = nn.LayerNorm(d)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """Map (batch, s) token ids to (batch, s, v) next-token logits."""
        x = self.embed(tokens)
        for block in self.blocks:
            x = block(x)
        # Output embedding is the transpose of the input embedding; no bias.
        return nn.functional.linear(self.norm_final(x), self.embed.weight)
