import torch


def moving_bar_sequences(count, seq_len=16, size=64, seed=42):
    """Solid-color bars drifting rightward on black, one sequence per scene."""
    g = torch.Generator().manual_seed(seed)
    seqs = []
    span = size - 12
    for _ in range(count):
        frames = torch.zeros(seq_len, 3, size, size)
        color = torch.rand(3, generator=g) * 0.8 + 0.2
        x0 = int(torch.randint(0, span // 2, (1,), generator=g))
        for t in range(seq_len):
            x = (x0 + 2 * t) % span
            frames[t, :, size // 4: size - size // 4, x:x + 12] = color.view(3, 1, 1)
        seqs.append(frames)
    return torch.stack(seqs)
