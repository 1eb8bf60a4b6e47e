import pytest


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    """Build a minimal seq2seq checkpoint on disk, no network needed.

    A word-level tokenizer trained on a few sentences plus a one-layer
    model is enough to exercise loading, generation, likelihood scoring
    and fine-tuning.
    """
    torch = pytest.importorskip("torch")
    pytest.importorskip("transformers")
    pytest.importorskip("tokenizers")
    from tokenizers import Tokenizer
    from tokenizers.models import WordLevel
    from tokenizers.pre_tokenizers import Whitespace
    from tokenizers.trainers import WordLevelTrainer
    from transformers import (
        PreTrainedTokenizerFast,
        T5Config,
        T5ForConditionalGeneration,
    )

    corpus = [
        "yes no",
        "parse : Both were shot in the confrontation with police [SEP] shoot",
        "parse discourse : a b c d e",
        "[PREDICATE] </qa> </q> </a>",
        "Who was shot ? Both </q> so the bridge could be built",
        "Workers live near the huge construction site",
    ]
    tok = Tokenizer(WordLevel(unk_token="<unk>"))
    tok.pre_tokenizer = Whitespace()
    trainer = WordLevelTrainer(special_tokens=["<pad>", "</s>", "<unk>"])
    tok.train_from_iterator(corpus, trainer)
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        pad_token="<pad>",
        eos_token="</s>",
        unk_token="<unk>",
    )

    path = tmp_path_factory.mktemp("checkpoint") / "tiny"
    fast.save_pretrained(path)
    config = T5Config(
        vocab_size=fast.vocab_size + 8,
        d_model=32,
        d_ff=37,
        d_kv=16,
        num_layers=1,
        num_heads=2,
        pad_token_id=fast.pad_token_id,
        eos_token_id=fast.eos_token_id,
        decoder_start_token_id=fast.pad_token_id,
    )
    torch.manual_seed(0)
    T5ForConditionalGeneration(config).save_pretrained(path)
    return str(path)
