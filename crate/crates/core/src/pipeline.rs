//! Parse, score and measure every revision of a corpus.

use rayon::prelude::*;
use thiserror::Error;

use crate::citation_need::{needing_rows, LabeledSentence, NeedError, NeedModel, NeedRow, Scorer};
use crate::corpus::PageRecord;
use crate::metrics::{need_counts, risk_counts, QualityScore, ScoredPage};
use crate::perennial::PerennialList;
use crate::wikitext::{parse_article, ParseConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("revision {revision_id} of page {page_id} has no wikitext")]
    MissingWikitext { page_id: u64, revision_id: u64 },
    #[error("scoring revision {revision_id}: {source}")]
    Need {
        revision_id: u64,
        #[source]
        source: NeedError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevisionOutput {
    pub score: QualityScore,
    pub sentences: Vec<LabeledSentence>,
    pub unparseable_urls: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredCorpus {
    /// Pages in input order, wikitext dropped.
    pub pages: Vec<ScoredPage>,
    /// Needing-sentence rows, when requested.
    pub needing: Vec<NeedRow>,
    pub unparseable_urls: usize,
}

pub struct Pipeline<'a, M: NeedModel> {
    pub scorer: &'a Scorer<M>,
    pub parse: &'a ParseConfig,
    pub list: &'a PerennialList,
}

impl<'a, M: NeedModel> Pipeline<'a, M> {
    pub fn new(scorer: &'a Scorer<M>, parse: &'a ParseConfig, list: &'a PerennialList) -> Self {
        Pipeline { scorer, parse, list }
    }

    pub fn score_revision(&self, revision_id: u64, wikitext: &str) -> Result<RevisionOutput, PipelineError> {
        let parsed = parse_article(wikitext, self.parse);
        let sentences = self
            .scorer
            .label_sentences(parsed.sentences)
            .map_err(|source| PipelineError::Need { revision_id, source })?;
        let (n_need, n_cited) = need_counts(&sentences);
        let (n_citations, n_risky) = risk_counts(&parsed.references, self.list);
        Ok(RevisionOutput {
            score: QualityScore::new(revision_id, n_need, n_cited, n_citations, n_risky),
            sentences,
            unparseable_urls: parsed.unparseable_urls,
        })
    }

    fn score_page(&self, page: &PageRecord, keep_rows: bool) -> Result<(ScoredPage, Vec<NeedRow>, usize), PipelineError> {
        let mut scores = Vec::with_capacity(page.revisions.len());
        let mut rows = Vec::new();
        let mut bad_urls = 0;
        for rev in &page.revisions {
            let text = rev.wikitext.as_deref().ok_or(PipelineError::MissingWikitext {
                page_id: page.page_id,
                revision_id: rev.revision_id,
            })?;
            let out = self.score_revision(rev.revision_id, text)?;
            if keep_rows {
                rows.extend(needing_rows(rev.revision_id, &out.sentences));
            }
            bad_urls += out.unparseable_urls;
            scores.push(out.score);
        }
        let mut stripped = page.clone();
        stripped.revisions.iter_mut().for_each(|r| r.wikitext = None);
        let scored = ScoredPage::new(stripped, scores).expect("one score per revision");
        Ok((scored, rows, bad_urls))
    }

    /// Scores pages in parallel; output order follows the input.
    pub fn score_corpus(&self, pages: &[PageRecord], keep_rows: bool) -> Result<ScoredCorpus, PipelineError> {
        let results: Vec<_> = pages.par_iter().map(|p| self.score_page(p, keep_rows)).collect::<Result<_, _>>()?;
        let mut out = ScoredCorpus::default();
        for (page, rows, bad) in results {
            out.pages.push(page);
            out.needing.extend(rows);
            out.unparseable_urls += bad;
        }
        Ok(out)
    }
}
