pub mod ast;
pub mod budget;
pub mod calculus;
pub mod cert;
pub mod cli;
pub mod coding;
pub mod descriptor;
pub mod dyadic;
pub mod error;
pub mod function;
pub mod intertwine;
pub mod jiangsu;
pub mod matrix;
pub mod poly;
pub mod presentation;
pub mod scalar;
pub mod uhf;
