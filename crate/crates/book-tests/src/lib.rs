//! Keeps the book honest: every `rust` code block in `book/src/*.md` is
//! compiled and executed as a doc-test of this crate, so `cargo test`
//! fails whenever the guide drifts from the library.

macro_rules! book_chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!($path)]
        pub mod $name {}
    };
}

book_chapter!(introduction, "../../../book/src/introduction.md");
book_chapter!(model, "../../../book/src/model.md");
book_chapter!(divergences, "../../../book/src/divergences.md");
book_chapter!(separation, "../../../book/src/separation.md");
book_chapter!(decoding, "../../../book/src/decoding.md");
book_chapter!(planning, "../../../book/src/planning.md");
book_chapter!(learning, "../../../book/src/learning.md");
book_chapter!(hard_instances, "../../../book/src/hard-instances.md");
book_chapter!(cli, "../../../book/src/cli.md");
