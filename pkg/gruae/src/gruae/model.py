"""Sequence autoencoder for running-motion crops.

The encoder embeds each frame with a small conv stack and feeds the
embeddings to a GRU in time order; its last hidden state is the latent.
The decoder embeds the same sequence in reverse order, runs a GRU seeded
with the latent, and deconvolves each step's output into a reconstruction
of the frame one before that step's input frame.  The earliest frame has
no predecessor, so it contributes no reconstruction target.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .errors import ShapeMismatch


@dataclass(frozen=True)
class GruAeConfig:
    latent_dim: int = 128
    seq_len: int = 16
    input_size: tuple[int, int] = (64, 64)  # (W, H)
    learning_rate: float = 1e-3
    train_split: float = 0.8
    epochs: int = 20
    batch_size: int = 8
    base_channels: int = 16
    frame_dim: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim <= 0:
            raise ValueError("latent_dim must be positive")
        if not (0.0 < self.train_split < 1.0):
            raise ValueError("train_split must be in (0, 1)")
        if self.input_size[0] % 8 or self.input_size[1] % 8:
            raise ValueError("input_size must be divisible by 8 (three stride-2 convs)")
        if self.seq_len < 2:
            raise ValueError("seq_len must be at least 2")


def reversed_inputs_and_targets(seq: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Decoder io for a (B, N, C, H, W) batch.

    Input step j is original frame N-1-j; its reconstruction target is the
    frame one earlier, N-2-j.  The last step (original frame 0) is dropped.
    """
    if seq.ndim != 5 or seq.shape[1] < 2:
        raise ShapeMismatch(f"expected (B, N>=2, C, H, W), got {tuple(seq.shape)}")
    inputs = torch.flip(seq, dims=(1,))
    targets = torch.flip(seq[:, :-1], dims=(1,))
    return inputs, targets


class FrameEmbedder(nn.Module):
    """Three stride-2 convs reducing a frame to a flat embedding."""

    def __init__(self, cfg: GruAeConfig):
        super().__init__()
        c = cfg.base_channels
        self.net = nn.Sequential(
            nn.Conv2d(3, c, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(c, 2 * c, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1), nn.ReLU(),
        )
        self.grid = (cfg.input_size[1] // 8, cfg.input_size[0] // 8)
        self.proj = nn.Linear(4 * c * self.grid[0] * self.grid[1], cfg.frame_dim)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        # frames: (B*N, C, H, W) -> (B*N, frame_dim)
        return self.proj(self.net(frames).flatten(1))


class FrameDecoder(nn.Module):
    """Mirror of the embedder: GRU output back to an image via deconvs."""

    def __init__(self, cfg: GruAeConfig):
        super().__init__()
        c = cfg.base_channels
        self.grid = (cfg.input_size[1] // 8, cfg.input_size[0] // 8)
        self.proj = nn.Linear(cfg.latent_dim, 4 * c * self.grid[0] * self.grid[1])
        self.net = nn.Sequential(
            nn.ConvTranspose2d(4 * c, 2 * c, 4, stride=2, padding=1), nn.ReLU(),
            nn.ConvTranspose2d(2 * c, c, 4, stride=2, padding=1), nn.ReLU(),
            nn.ConvTranspose2d(c, 3, 4, stride=2, padding=1), nn.Sigmoid(),
        )
        self.channels = 4 * c

    def forward(self, hidden: torch.Tensor) -> torch.Tensor:
        x = self.proj(hidden).view(-1, self.channels, self.grid[0], self.grid[1])
        return self.net(x)


class GruAutoencoder(nn.Module):
    def __init__(self, cfg: GruAeConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = FrameEmbedder(cfg)  # shared by encoder and decoder
        self.encoder_gru = nn.GRU(cfg.frame_dim, cfg.latent_dim, batch_first=True)
        self.decoder_gru = nn.GRU(cfg.frame_dim, cfg.latent_dim, batch_first=True)
        self.frame_decoder = FrameDecoder(cfg)

    def _embed_sequence(self, seq: torch.Tensor) -> torch.Tensor:
        b, n = seq.shape[:2]
        flat = self.embed(seq.reshape(b * n, *seq.shape[2:]))
        return flat.view(b, n, -1)

    def encode(self, seq: torch.Tensor) -> torch.Tensor:
        """(B, N, C, H, W) -> (B, latent_dim): the GRU's last hidden state."""
        _, hidden = self.encoder_gru(self._embed_sequence(seq))
        return hidden[-1]

    def decode(self, latent: torch.Tensor, seq: torch.Tensor) -> torch.Tensor:
        """Reconstructions of frames N-2, ..., 0 (in that order)."""
        inputs, _ = reversed_inputs_and_targets(seq)
        outputs, _ = self.decoder_gru(self._embed_sequence(inputs), latent.unsqueeze(0))
        steps = outputs[:, :-1]  # the last step's input has no predecessor
        b, m = steps.shape[:2]
        frames = self.frame_decoder(steps.reshape(b * m, -1))
        return frames.view(b, m, *seq.shape[2:])

    def forward(self, seq: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        latent = self.encode(seq)
        return latent, self.decode(latent, seq)

    def reconstruction_loss(self, seq: torch.Tensor) -> torch.Tensor:
        _, recon = self(seq)
        _, targets = reversed_inputs_and_targets(seq)
        return nn.functional.mse_loss(recon, targets)
