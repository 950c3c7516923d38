from squirm.main import main

main()
