//! Cross-validation bookkeeping for the kernel estimators.

use std::io::Write;

/// Whether the chosen candidate maximizes or minimizes the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvCriterion {
    Maximize,
    Minimize,
}

/// One hyperparameter candidate; `lambda` is absent for estimators without
/// a ridge term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvCandidate {
    pub sigma: f64,
    pub lambda: Option<f64>,
}

/// Grid, per-candidate scores, and the selected index.
#[derive(Debug, Clone)]
pub struct CvReport {
    candidates: Vec<CvCandidate>,
    scores: Vec<f64>,
    chosen: usize,
    criterion: CvCriterion,
}

impl CvReport {
    /// Selects the best finite-scored candidate. Ties resolve to the
    /// smallest sigma, then the smallest lambda. Returns `None` when no
    /// candidate scored finite (the estimator must then report a failure).
    pub fn select(
        candidates: Vec<CvCandidate>,
        scores: Vec<f64>,
        criterion: CvCriterion,
    ) -> Option<Self> {
        assert_eq!(candidates.len(), scores.len());
        let better = |a: f64, b: f64| match criterion {
            CvCriterion::Maximize => a > b,
            CvCriterion::Minimize => a < b,
        };
        let mut chosen: Option<usize> = None;
        for (i, &score) in scores.iter().enumerate() {
            if !score.is_finite() {
                continue;
            }
            match chosen {
                None => chosen = Some(i),
                Some(best) => {
                    let tie_break = score == scores[best]
                        && (candidates[i].sigma, candidates[i].lambda.unwrap_or(0.0))
                            < (candidates[best].sigma, candidates[best].lambda.unwrap_or(0.0));
                    if better(score, scores[best]) || tie_break {
                        chosen = Some(i);
                    }
                }
            }
        }
        chosen.map(|chosen| Self {
            candidates,
            scores,
            chosen,
            criterion,
        })
    }

    pub fn candidates(&self) -> &[CvCandidate] {
        &self.candidates
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn chosen_index(&self) -> usize {
        self.chosen
    }

    pub fn chosen(&self) -> CvCandidate {
        self.candidates[self.chosen]
    }

    pub fn criterion(&self) -> CvCriterion {
        self.criterion
    }

    /// CSV dump: sigma, lambda, score, chosen flag.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sigma,lambda,score,chosen")?;
        for (i, (cand, score)) in self.candidates.iter().zip(&self.scores).enumerate() {
            let lambda = cand.lambda.map(|l| l.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{}",
                cand.sigma,
                lambda,
                score,
                usize::from(i == self.chosen)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(sigma: f64, lambda: Option<f64>) -> CvCandidate {
        CvCandidate { sigma, lambda }
    }

    #[test]
    fn picks_max_and_min() {
        let cands = vec![cand(1.0, None), cand(2.0, None)];
        let max = CvReport::select(cands.clone(), vec![0.5, 0.9], CvCriterion::Maximize).unwrap();
        assert_eq!(max.chosen_index(), 1);
        let min = CvReport::select(cands, vec![0.5, 0.9], CvCriterion::Minimize).unwrap();
        assert_eq!(min.chosen_index(), 0);
    }

    #[test]
    fn ties_prefer_smallest_sigma() {
        let cands = vec![cand(2.0, None), cand(1.0, None)];
        let r = CvReport::select(cands, vec![0.7, 0.7], CvCriterion::Maximize).unwrap();
        assert_eq!(r.chosen().sigma, 1.0);
    }

    #[test]
    fn non_finite_scores_are_skipped() {
        let cands = vec![cand(1.0, None), cand(2.0, None)];
        let r = CvReport::select(
            cands.clone(),
            vec![f64::NEG_INFINITY, 0.1],
            CvCriterion::Maximize,
        )
        .unwrap();
        assert_eq!(r.chosen_index(), 1);
        assert!(CvReport::select(
            cands,
            vec![f64::NEG_INFINITY, f64::NAN],
            CvCriterion::Maximize
        )
        .is_none());
    }

    #[test]
    fn csv_has_one_chosen_row() {
        let r = CvReport::select(
            vec![cand(1.0, Some(0.1)), cand(2.0, None)],
            vec![0.3, 0.1],
            CvCriterion::Minimize,
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sigma,lambda,score,chosen\n"));
        assert_eq!(text.matches(",1\n").count(), 1);
    }
}
