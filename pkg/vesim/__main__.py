from vesim.main import cli_main

raise SystemExit(cli_main())
