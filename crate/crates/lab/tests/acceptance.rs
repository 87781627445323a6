//! One PASS/FAIL line per acceptance criterion. Positional arguments
//! restrict the run to the named criteria (id or name); `MIXLAB_LEVEL=fast`
//! selects the reduced suite.

use std::process::ExitCode;

use mixlab::verify::{run_criterion, Level, CRITERIA};

fn main() -> ExitCode {
    let level = match std::env::var("MIXLAB_LEVEL").as_deref() {
        Ok("fast") => Level::Fast,
        _ => Level::Full,
    };
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for &(id, name, _) in &CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| *f == id.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let r = run_criterion(id, level, 2024);
        println!("{}", r.line());
        ran += 1;
        failed += !r.passed as usize;
    }
    println!("{} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
