"""CLI: train the autoencoder, export scene latents, adapt external features."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import load_scene_sequences
from .errors import GruAeError
from .export import adapt_external, encode_scenes
from .model import GruAeConfig
from .train import save_checkpoint, save_loss_curve, train


def _cmd_train(args):
    cfg = GruAeConfig(
        latent_dim=args.latent_dim, seq_len=args.seq_len,
        input_size=(args.input_size, args.input_size),
        learning_rate=args.lr, train_split=args.train_split,
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
    )
    data_root = args.data_root or Path(args.scenes).parent
    ids, sequences = load_scene_sequences(args.scenes, data_root, cfg.seq_len,
                                          cfg.input_size)
    result = train(sequences, ids, cfg)
    save_checkpoint(result.model, args.out)
    if args.loss_curve:
        save_loss_curve(result, args.loss_curve)
    val = f", val {result.val_losses[-1]:.5f}" if result.val_losses else ""
    print(f"train: {len(result.train_ids)}/{len(ids)} scenes, "
          f"loss {result.train_losses[0]:.5f} -> {result.train_losses[-1]:.5f}{val} "
          f"-> {args.out}")


def _cmd_encode(args):
    data_root = args.data_root or Path(args.scenes).parent
    ids = encode_scenes(args.checkpoint, args.scenes, data_root, args.out, name=args.name)
    print(f"encode: {len(ids)} scenes -> {args.out}")


def _cmd_adapt(args):
    ids = adapt_external(args.input, args.out, args.name)
    print(f"adapt: {len(ids)} scenes as {args.name!r} -> {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gruae",
        description="GRU autoencoder embeddings for two-step running sequences",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train", help="train on two-step sequences from scenes.json")
    p.add_argument("--scenes", required=True)
    p.add_argument("--data-root", help="directory crop_refs are relative to")
    p.add_argument("--out", default="gruae.pt")
    p.add_argument("--loss-curve", help="write per-epoch losses as JSON")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--latent-dim", type=int, default=128)
    p.add_argument("--seq-len", type=int, default=16)
    p.add_argument("--input-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--train-split", type=float, default=0.8)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = subs.add_parser("encode", help="export per-scene latents")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scenes", required=True)
    p.add_argument("--data-root")
    p.add_argument("--out", default="gruae_embeddings.json")
    p.add_argument("--name", default="gruae")
    p.set_defaults(func=_cmd_encode)

    p = subs.add_parser("adapt", help="mean-pool external per-frame features")
    p.add_argument("--input", required=True)
    p.add_argument("--name", required=True, help="embedding name, e.g. hhcl_runner")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_adapt)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
        return 0
    except GruAeError as exc:
        print(f"error: {type(exc).__name__}: {str(exc) or exc!r}".replace("\n", " "),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}".replace("\n", " "), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
