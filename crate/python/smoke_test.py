"""Smoke test for the pardec_py extension.

Build first:  maturin develop --release -m crates/python/Cargo.toml
"""

import os
import tempfile

import pardec_py as pd


def main():
    corpus = pd.Corpus.bundled()
    assert corpus.num_files == 2
    model = pd.NGram(corpus, file=0)

    dist = model.distribution(corpus.encode("spell cat :"))
    assert abs(sum(dist) - 1.0) < 1e-9

    prompt = corpus.encode("what color is sky ?")
    vanilla = pd.decode(model, prompt, strategy="vanilla", gen_length=64, block_size=32)
    text = corpus.decode(vanilla.output)
    assert text.startswith("sky is blue ."), text
    assert vanilla.forward_calls == 64

    egp = pd.decode(model, prompt, strategy="egp", gen_length=64, block_size=32, reference=vanilla.output)
    assert egp.output == vanilla.output
    assert egp.forward_calls < vanilla.forward_calls

    prompts = corpus.prompts(0)[::40]
    samples = pd.collect(model, prompts, gen_length=64, block_size=32)
    assert samples and len(samples[0][0]) == 32

    filt, losses = pd.Filter.train(samples, epochs=20, lr=1e-3)
    assert losses[-1] < losses[0]
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "f.bin")
        filt.save(path)
        back = pd.Filter.load(path)
        conf = [0.5] * 32
        assert back.forward(conf) == filt.forward(conf)

    learned = pd.decode(model, prompt, strategy="learn2pd", gen_length=64, block_size=32, filter=filt, eotp="block")
    assert learned.forward_calls <= vanilla.forward_calls

    try:
        pd.decode(model, prompt, strategy="greedy")
    except ValueError as e:
        assert "unknown strategy" in str(e)
    else:
        raise AssertionError("bad strategy accepted")

    print("smoke test ok:", text.split(" [EoT]")[0], "| calls", vanilla.forward_calls, egp.forward_calls, learned.forward_calls)


if __name__ == "__main__":
    main()
