use pegraph::chains::QuerySpec;
use pegraph::corpus::default_stopwords;
use pegraph::peg::{export_graph, ExportFormat};
use pegraph::peg::run_query;
use pegraph::synthetic::{planted_corpus, PlantedCorpus, PlantedSpec};
use pegraph::{EngineConfig, Error, Execution, Index};

fn fixture() -> (PlantedCorpus, Index) {
    let planted = planted_corpus(&PlantedSpec {
        n_papers: 60,
        n_blocks: 2,
        n_words: 100,
        n_authors: 20,
        n_bridges: 3,
        seed: 0,
        ..Default::default()
    })
    .unwrap();
    let config = EngineConfig {
        k: 2,
        chain_length: 5,
        ..Default::default()
    };
    let index = Index::build(planted.corpus.clone(), default_stopwords(), config, Execution::Sequential).unwrap();
    (planted, index)
}

fn first_in_block(p: &PlantedCorpus, block: usize) -> String {
    let i = p.blocks.iter().position(|b| *b == Some(block)).unwrap();
    p.corpus.get(i).id.clone()
}

#[test]
fn bridge_paper_yields_one_chain_per_community() {
    let (p, index) = fixture();
    let out = run_query(&index, &QuerySpec::single_paper("P0061"), Execution::Sequential).unwrap();
    assert_eq!(out.graph.chains.len(), 2);
    assert!(out.warnings.is_empty());
    for c in &out.graph.chains {
        assert_eq!(c.papers.len(), 5);
        assert!(c.papers.iter().any(|id| id == "P0061"));
        assert!(c.score > 0.0);
        assert!(!c.topic_words.is_empty());
    }
    assert_eq!(out.graph.chains[0].label, "chain-1");
    let plain = run_query(&index, &QuerySpec::single_paper(first_in_block(&p, 1)), Execution::Sequential).unwrap();
    assert_eq!(plain.graph.chains.len(), 1);
}

#[test]
fn lowering_the_membership_threshold_never_loses_chains() {
    let (p, index) = fixture();
    for id in ["P0061", "P0062", &first_in_block(&p, 0)] {
        let mut last = 0;
        for com_t in [0.6, 0.4, 0.2, 0.05] {
            let q = QuerySpec {
                com_t: Some(com_t),
                ..QuerySpec::single_paper(id)
            };
            let n = match run_query(&index, &q, Execution::Sequential) {
                Ok(o) => o.graph.chains.len(),
                Err(Error::Query(_)) => 0,
                Err(e) => panic!("{e}"),
            };
            assert!(n >= last, "{id}: {n} chains at com_t {com_t}, {last} before");
            last = n;
        }
    }
}

#[test]
fn two_paper_query_is_anchored_on_both_ends() {
    let (p, index) = fixture();
    let block: Vec<usize> = (0..p.corpus.len()).filter(|&i| p.blocks[i] == Some(0)).collect();
    let mut sorted = block.clone();
    sorted.sort_by(|&a, &b| p.corpus.chrono_key(a).cmp(&p.corpus.chrono_key(b)));
    let (s, t) = (p.corpus.get(sorted[0]).id.clone(), p.corpus.get(*sorted.last().unwrap()).id.clone());
    // Argument order does not matter.
    let out = run_query(&index, &QuerySpec::two_paper(&t, &s), Execution::Sequential).unwrap();
    for c in &out.graph.chains {
        assert_eq!(c.papers.first(), Some(&s));
        assert_eq!(c.papers.last(), Some(&t));
    }
    let other = first_in_block(&p, 1);
    let err = run_query(&index, &QuerySpec::two_paper(&s, &other), Execution::Sequential).unwrap_err();
    assert!(matches!(err, Error::Query(ref m) if m == "papers share no community"), "{err}");
}

#[test]
fn keyword_query_and_errors() {
    let (p, index) = fixture();
    let word = p.corpus.get(0).abstract_text.split(' ').next().unwrap().to_string();
    let out = run_query(&index, &QuerySpec::keyword(&word), Execution::Sequential).unwrap();
    assert!(!out.graph.chains.is_empty());
    let err = run_query(&index, &QuerySpec::keyword("zzzqqq"), Execution::Sequential).unwrap_err();
    assert!(matches!(err, Error::Query(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
    let err = run_query(&index, &QuerySpec::single_paper("nope"), Execution::Sequential).unwrap_err();
    assert!(matches!(err, Error::Lookup(_)));
}

#[test]
fn parallel_and_reloaded_indexes_give_identical_bytes() {
    let (_, index) = fixture();
    let q = QuerySpec::single_paper("P0061");
    let seq = run_query(&index, &q, Execution::Sequential).unwrap().graph;
    let par = run_query(&index, &q, Execution::Parallel).unwrap().graph;
    let dir = tempfile::tempdir().unwrap();
    index.save(dir.path().join("idx")).unwrap();
    let loaded = Index::load(dir.path().join("idx")).unwrap();
    let again = run_query(&loaded, &q, Execution::Sequential).unwrap().graph;
    for f in [ExportFormat::Dot, ExportFormat::Json] {
        assert_eq!(export_graph(&seq, f), export_graph(&par, f));
        assert_eq!(export_graph(&seq, f), export_graph(&again, f));
    }
}
