//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use xjx_cli::verify::{run, VerifyOptions};

fn main() -> ExitCode {
    faer::set_global_parallelism(faer::Par::Seq);
    let report = run(VerifyOptions::default(), &[], |c| println!("{}", c.line()));
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    println!("acceptance: {passed}/{} criteria passed", report.criteria.len());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
