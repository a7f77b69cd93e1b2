from folkstat.cli import main

main()
