import pytest

from config import Config
from corpus.cases import CASES, get_case
from corpus.harness import check_case


@pytest.mark.parametrize("name", [case.name for case in CASES])
def test_emulated_programs_agree_with_the_region_ir(name, corpus_dir):
    seeds = Config().test_seeds
    report = check_case(get_case(name), corpus_dir, seeds=seeds, differential=True)
    assert report.passed, report.failure
