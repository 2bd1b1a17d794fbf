pub mod boolean;
pub mod ccsdp;
pub mod cpog;
pub mod cpog_lts;
pub mod lexer;
pub mod ltl;
pub mod project;
pub mod reconfig;
pub mod workflow;
