use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;

use weakstore::api::{router, spawn_reaper, AppState};
use weakstore::cli::{check_file, run_iterations, Cli, Command, RunArgs, ServeArgs};
use weakstore_core::executor::Program;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Serve(args) => serve(args),
        Command::Check(args) => {
            let (code, report) = check_file(&args.history, args.isolation);
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            ExitCode::from(code as u8)
        }
        Command::Run(args) => run(args),
    }
}

fn fail(code: &str, message: impl ToString) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": code, "message": message.to_string() }));
    ExitCode::from(2)
}

fn run(args: RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.program) {
        Ok(t) => t,
        Err(e) => return fail("io", e),
    };
    let program = match Program::from_json(&text) {
        Ok(p) => p,
        Err(e) => return fail("program", e),
    };
    if let Some(dir) = &args.histories {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return fail("io", e);
        }
    }
    let mut io_error = None;
    let report = run_iterations(&program, args.store.isolation, &args.store.config(), args.iterations, |i, h| {
        if let Some(dir) = &args.histories {
            if let Err(e) = std::fs::write(dir.join(format!("iteration-{i}.json")), h.to_json()) {
                io_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = io_error {
        return fail("io", e);
    }
    match report {
        Ok(r) => {
            println!("{}", serde_json::to_string(&r).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => fail("execution", e),
    }
}

fn serve(args: ServeArgs) -> ExitCode {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail("runtime", e),
    };
    runtime.block_on(async {
        let app = AppState::new(args.store.config(), args.settings());
        let listener = match tokio::net::TcpListener::bind(&args.bind).await {
            Ok(l) => l,
            Err(e) => return fail("bind", e),
        };
        eprintln!("listening on {}", listener.local_addr().map_or(args.bind.clone(), |a| a.to_string()));
        spawn_reaper(Arc::clone(&app));
        let served = axum::serve(listener, router(Arc::clone(&app)))
            .with_graceful_shutdown(shutdown_signal())
            .await;
        if let Err(e) = served {
            return fail("serve", e);
        }
        if let Some(path) = &args.dump_history {
            if let Err(e) = std::fs::write(path, app.store().history().to_json()) {
                return fail("io", e);
            }
        }
        ExitCode::SUCCESS
    })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        if let Ok(mut term) = signal(SignalKind::terminate()) {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => {}
                _ = term.recv() => {}
            }
            return;
        }
    }
    let _ = tokio::signal::ctrl_c().await;
}
