fn main() {
    // die quietly on a closed pipe, as `vng example | head` expects
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(vngale::cli::run(std::env::args_os()));
}
