pub mod ballot;
pub mod distance;
pub mod lp;
pub mod oracle;
pub mod parliament;
pub mod search;
pub mod synthetic;
pub mod tabulate;
