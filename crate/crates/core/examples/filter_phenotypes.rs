//! Applies the adolescent and adult selection criteria to a small
//! phenotype table laid out like the ABIDE release.
//!
//! ```text
//! cargo run --example filter_phenotypes
//! ```

use graph_fkt::io::phenotype::{filter_records, parse_phenotypes, ColumnMap, Criteria};

const TABLE: &str = "\
FILE_ID,SITE_ID,DX_GROUP,AGE_AT_SCAN,EYE_STATUS_AT_SCAN,func_mean_fd
NYU_0001,NYU,1,12.4,1,0.08
NYU_0002,NYU,2,15.9,1,0.21
NYU_0003,NYU,2,16.2,1,0.11
UCLA_0001,UCLA,1,24.0,1,0.05
UCLA_0002,UCLA,2,31.5,2,0.09
UCLA_0003,UCLA,2,19.1,1,0.15
no_filename,UM,1,14.0,1,0.10
";

fn main() -> graph_fkt::Result<()> {
    let table = parse_phenotypes(TABLE.as_bytes(), &ColumnMap::default())?;
    for skipped in &table.skipped {
        println!("skipped line {}: {}", skipped.line, skipped.reason);
    }
    for (name, criteria) in [("adolescents", Criteria::adolescents()), ("adults", Criteria::adults())] {
        let kept = filter_records(&table.records, &criteria);
        let ids: Vec<String> = kept
            .iter()
            .map(|r| format!("{} ({:?})", r.subject_id, r.diagnosis))
            .collect();
        println!("{name}: {}", ids.join(", "));
    }
    Ok(())
}
