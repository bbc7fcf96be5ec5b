use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AlphaReport, CfaFit, CfaModel, SubscaleStats};

/// Everything `validate` produces; renders as the reliability and model-fit tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub n: usize,
    pub descriptives: Option<Vec<SubscaleStats>>,
    pub alpha: Option<AlphaReport>,
    pub model: Option<CfaModel>,
    pub fit: Option<CfaFit>,
    pub warnings: Vec<String>,
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "< .001".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_else(|| "-".into())
}

impl ValidationReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(d) = &self.descriptives {
            let _ = writeln!(out, "Subscale Descriptives (n = {})", self.n);
            for s in d {
                let _ = writeln!(out, "{:<40}sd {:.4}", s.label(), s.sd);
            }
            out.push('\n');
        }
        if let Some(a) = &self.alpha {
            let _ = writeln!(out, "OSLQ Internal Consistency (n = {})", a.n);
            let _ = writeln!(out, "{:<24}{:>6}  Cronbach's Alpha (α)", "Sub Scales", "Items");
            for s in &a.subscales {
                let _ = writeln!(out, "{:<24}{:>6}  {:.3}", s.name, s.k, s.alpha);
            }
            out.push('\n');
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(out, "Exact Model Fit");
            let _ = writeln!(out, "{:<12}{:<8}{:<10}χ²/df", "χ²", "df", "p");
            let _ = writeln!(
                out,
                "{:<12.2}{:<8}{:<10}{}",
                f.chi2,
                f.df,
                fmt_p(f.p_value),
                fmt_opt(f.chi2_per_df(), 3)
            );
            out.push('\n');
            let _ = writeln!(out, "Fit Measures");
            let _ = writeln!(out, "{:<8}{:<8}{:<8}RMSEA 90% CI", "CFI", "TLI", "RMSEA");
            let _ = writeln!(out, "{:<24}{:<8}Upper", "", "Lower");
            let (lo, hi) = match f.rmsea_ci90 {
                Some((lo, hi)) => (Some(lo), Some(hi)),
                None => (None, None),
            };
            let _ = writeln!(
                out,
                "{:<8}{:<8}{:<8}{:<8}{}",
                fmt_opt(f.cfi, 3),
                fmt_opt(f.tli, 3),
                fmt_opt(f.rmsea, 4),
                fmt_opt(lo, 4),
                fmt_opt(hi, 4)
            );
            let _ = writeln!(
                out,
                "(n = {}, iterations = {}, gradient max-norm = {:.2e})",
                f.n, f.iterations, f.gradient_norm
            );
        }
        if let Some(m) = &self.model {
            out.push('\n');
            let _ = writeln!(out, "Factor loadings (factor variances fixed to 1)");
            for (i, (l, u)) in m.item_loadings().iter().zip(&m.uniquenesses).enumerate() {
                let f = m.pattern[i].iter().position(|&b| b).unwrap_or(0);
                let _ = writeln!(
                    out,
                    "item_{:02}  {:<22}{:>8.4}  uniqueness {:.4}",
                    i + 1,
                    m.factor_names.get(f).map(String::as_str).unwrap_or("?"),
                    l,
                    u
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
