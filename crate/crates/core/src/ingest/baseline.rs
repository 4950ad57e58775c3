use std::collections::BTreeMap;

use super::facts::parse_facts;
use super::instance::{link_ref, pcu, IngestError, ParseOptions, Warning};
use crate::model::{Instance, LinkId};
use crate::pcu::Pcu;

/// Reads `pddl_solution(L,C)` facts: an externally obtained counter per link.
pub fn parse_baseline(text: &str, instance: &Instance) -> Result<BTreeMap<LinkId, Pcu>, IngestError> {
    parse_baseline_with(text, instance, ParseOptions::default()).map(|(m, _)| m)
}

pub fn parse_baseline_with(
    text: &str,
    instance: &Instance,
    options: ParseOptions,
) -> Result<(BTreeMap<LinkId, Pcu>, Vec<Warning>), IngestError> {
    let file = parse_facts(text)?;
    let declared = instance
        .links
        .keys()
        .map(|l| (l.clone(), Default::default()))
        .collect();
    let mut out: BTreeMap<LinkId, Pcu> = BTreeMap::new();
    let mut warnings = Vec::new();
    for fact in &file.facts {
        if fact.predicate != "pddl_solution" || fact.args.len() != 2 {
            warnings.push(Warning {
                pos: fact.pos,
                message: format!("unknown predicate {}/{} ignored", fact.predicate, fact.args.len()),
            });
            continue;
        }
        let link = link_ref(&fact.args[0], fact.pos, &declared).map_err(|e| match e {
            IngestError::Semantic { pos, .. } => IngestError::Semantic {
                pos,
                message: format!("baseline link `{}` is not in the instance", fact.args[0]),
            },
            other => other,
        })?;
        let value = pcu(&fact.args[1], fact.pos, options)?;
        match out.get(&link) {
            Some(&old) if old != value => {
                return Err(IngestError::Semantic {
                    pos: fact.pos,
                    message: format!("contradictory baseline values for {link}: {old} and {value}"),
                })
            }
            _ => {
                out.insert(link, value);
            }
        }
    }
    Ok((out, warnings))
}
